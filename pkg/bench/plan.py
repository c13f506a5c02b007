from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator, Mapping, NamedTuple, Sequence, TYPE_CHECKING

from config import get_output_dir, get_seed, get_workers, load_yaml
from data import DEFAULT_RATIOS, BinStrategy, Dataset, load_csv, make_synthetic
from distill import DistillConfig, DistillMethod, DistillSpace, GmConfig, KipConfig, OutputKind
from errors import ConfigError
from evaluation import RANDOM_BASELINE_IPC, Representation
from models import ClassifierSpec
from representation import EncoderConfig, TrainConfig

if TYPE_CHECKING:
    from typing import Self

__all__ = ('DatasetEntry', 'EncoderEntry', 'PlanEntry', 'RunPlan', 'load_plan', 'expand', 'baseline_entries')

logger = logging.getLogger(__name__)

_PLAN_KEYS = {
    'name', 'seed', 'datasets', 'split', 'homogenizer', 'encoders', 'train',
    'distill', 'representations', 'classifiers', 'output_dir', 'workers', 'baseline_seeds',
}
_DISTILL_KEYS = {'methods', 'ipc', 'seeds', 'outputs', 'restarts', 'max_iter', 'kip', 'gm'}


class DatasetEntry(NamedTuple):
    """A CSV table with its YAML sidecar, or generator settings for a synthetic table."""

    name: str
    csv: Path | None = None
    schema: Path | None = None
    synthetic: tuple[tuple[str, Any], ...] | None = None

    def load(self) -> Dataset:
        if self.synthetic is not None:
            return make_synthetic(self.name, dict(self.synthetic))
        return load_csv(self.csv, self.schema, name=self.name)

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any], base: Path) -> Self:
        if 'synthetic' in raw:
            if 'name' not in raw:
                raise ConfigError(f'synthetic dataset entries need a "name", got {dict(raw)}')
            return cls(name=str(raw['name']), synthetic=tuple(sorted(dict(raw['synthetic']).items())))
        try:
            csv = base / raw['csv']
            schema = base / raw.get('schema', Path(raw['csv']).with_suffix('.yaml'))
        except KeyError:
            raise ConfigError(f'dataset entries need a "csv" or "synthetic" key, got {dict(raw)}') from None
        return cls(name=str(raw.get('name', csv.stem)), csv=csv, schema=schema)

    def __repr__(self) -> str:
        source = 'synthetic' if self.synthetic is not None else self.csv.name
        return f'<DatasetEntry name={self.name!r} source={source}>'


class EncoderEntry(NamedTuple):
    """An autoencoder to train, optionally followed by supervised fine-tuning."""

    cfg: EncoderConfig
    sft: bool = False

    @property
    def tag(self) -> str:
        return f'{self.cfg.tag}*' if self.sft else self.cfg.tag

    @property
    def slug(self) -> str:
        return f'{self.cfg.tag}-sft' if self.sft else self.cfg.tag

    @classmethod
    def parse(cls, raw: str | Mapping[str, Any]) -> list[EncoderEntry | None]:
        """``none``, an architecture name, or a mapping whose ``sft`` may list both variants."""
        if raw == 'none' or raw is None:
            return [None]
        if isinstance(raw, str):
            raw = {'arch': raw}
        raw = dict(raw)
        sft = raw.pop('sft', False)
        cfg = EncoderConfig.from_dict(raw)
        variants = sft if isinstance(sft, list) else [sft]
        return [cls(cfg, bool(variant)) for variant in variants]


class PlanEntry(NamedTuple):
    """One distillation run: a dataset, an optional encoder and a distiller setting."""

    dataset: DatasetEntry
    encoder: EncoderEntry | None
    distill: DistillConfig

    @property
    def encoder_tag(self) -> str:
        return 'none' if self.encoder is None else self.encoder.tag

    @property
    def is_vanilla(self) -> bool:
        return self.encoder is None

    def __repr__(self) -> str:
        cfg = self.distill
        return (
            f'<PlanEntry {self.dataset.name} encoder={self.encoder_tag} {cfg.tag} '
            f'space={cfg.space.value} ipc={cfg.ipc} seed={cfg.seed}>'
        )


def _as_tuple(raw: Any) -> tuple:
    return tuple(raw) if isinstance(raw, (list, tuple)) else (raw,)


@dataclass(frozen=True, slots=True)
class RunPlan:
    """A whole campaign: every dataset, encoder, distiller grid point and classifier.

    ``digest`` identifies the settings that influence results, so it is
    unaffected by ``workers`` and ``output_dir``.
    """

    name: str
    datasets: tuple[DatasetEntry, ...]
    encoders: tuple[EncoderEntry | None, ...] = (None,)
    methods: tuple[DistillMethod, ...] = tuple(DistillMethod)
    outputs: tuple[OutputKind, ...] = (OutputKind.as_is,)
    ipc: tuple[int, ...] = (10,)
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    representations: tuple[Representation, ...] = tuple(Representation)
    classifiers: tuple[ClassifierSpec, ...] = ()
    seed: int = 0
    ratios: tuple[float, ...] = DEFAULT_RATIOS
    bins: int = 10
    strategy: BinStrategy = BinStrategy.quantile
    train: TrainConfig = field(default_factory=TrainConfig)
    restarts: int = 5
    max_iter: int = 300
    kip: KipConfig = field(default_factory=KipConfig)
    gm: GmConfig = field(default_factory=GmConfig)
    output_dir: Path = Path('results')
    workers: int = 1
    baseline_seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    digest: str = ''

    def validate(self) -> RunPlan:
        if not self.datasets:
            raise ConfigError('a plan needs at least one dataset')
        if not self.classifiers:
            raise ConfigError('a plan needs at least one classifier')
        if len({spec.name for spec in self.classifiers}) != len(self.classifiers):
            raise ConfigError('classifier kinds must be unique within a plan')
        if len({entry.name for entry in self.datasets}) != len(self.datasets):
            raise ConfigError('dataset names must be unique')
        if any(ipc < 1 for ipc in self.ipc):
            raise ConfigError(f'ipc values must be >= 1, got {self.ipc}')
        if self.workers < 1:
            raise ConfigError(f'workers must be >= 1, got {self.workers}')
        if len(self.baseline_seeds) < 5:
            raise ConfigError('at least 5 baseline seeds are needed for the random@10 reference')
        return self

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any], base: Path = Path('.')) -> Self:
        unknown = sorted(set(raw) - _PLAN_KEYS)
        if unknown:
            raise ConfigError(f'unknown plan keys: {unknown}')
        distill = dict(raw.get('distill') or {})
        unknown = sorted(set(distill) - _DISTILL_KEYS)
        if unknown:
            raise ConfigError(f'unknown distill keys: {unknown}')
        seeds = distill.get('seeds', 5)
        homogenizer = raw.get('homogenizer') or {}

        encoders: list[EncoderEntry | None] = []
        for entry in raw.get('encoders', ['none']):
            encoders.extend(EncoderEntry.parse(entry))

        try:
            plan = cls(
                name=str(raw.get('name', 'campaign')),
                datasets=tuple(DatasetEntry.from_dict(entry, base) for entry in raw.get('datasets', [])),
                encoders=tuple(encoders),
                methods=tuple(DistillMethod(method) for method in _as_tuple(distill.get('methods', [m.value for m in DistillMethod]))),
                outputs=tuple(OutputKind(output) for output in _as_tuple(distill.get('outputs', 'as-is'))),
                ipc=tuple(int(ipc) for ipc in _as_tuple(distill.get('ipc', 10))),
                seeds=tuple(range(seeds)) if isinstance(seeds, int) else tuple(int(seed) for seed in seeds),
                representations=tuple(
                    Representation(value) for value in _as_tuple(raw.get('representations', [r.value for r in Representation]))
                ),
                classifiers=tuple(ClassifierSpec.from_dict(spec) for spec in raw.get('classifiers', [])),
                seed=int(raw.get('seed', get_seed())),
                ratios=tuple(float(ratio) for ratio in (raw.get('split') or {}).get('ratios', DEFAULT_RATIOS)),
                bins=int(homogenizer.get('bins', 10)),
                strategy=BinStrategy(homogenizer.get('strategy', 'quantile')),
                train=TrainConfig.from_dict(raw.get('train') or {}),
                restarts=int(distill.get('restarts', 5)),
                max_iter=int(distill.get('max_iter', 300)),
                kip=KipConfig.from_dict(distill.get('kip') or {}),
                gm=GmConfig.from_dict(distill.get('gm') or {}),
                output_dir=Path(raw.get('output_dir', get_output_dir())),
                workers=int(raw.get('workers', get_workers())),
                baseline_seeds=tuple(int(seed) for seed in raw.get('baseline_seeds', range(5))),
                digest=_digest({**raw, 'seed': int(raw.get('seed', get_seed()))}),
            )
        except ValueError as e:
            raise ConfigError(f'invalid plan: {e}') from e
        return plan.validate()

    def __repr__(self) -> str:
        return (
            f'<RunPlan name={self.name!r} datasets={len(self.datasets)} encoders={len(self.encoders)} '
            f'methods={[m.value for m in self.methods]} ipc={list(self.ipc)} seeds={len(self.seeds)} '
            f'digest={self.digest}>'
        )


def _digest(raw: Mapping[str, Any]) -> str:
    relevant = {key: value for key, value in raw.items() if key not in ('workers', 'output_dir')}
    text = json.dumps(relevant, sort_keys=True, default=str)
    return hashlib.sha256(text.encode('utf-8')).hexdigest()[:12]


def load_plan(
    path: str | Path,
    *,
    seed: int | None = None,
    workers: int | None = None,
    output_dir: str | Path | None = None,
) -> RunPlan:
    """Read a YAML plan, applying command-line overrides before hashing.

    Dataset paths are resolved relative to the plan file.
    """
    path = Path(path)
    raw = load_yaml(path)
    if seed is not None:
        raw['seed'] = seed
    if workers is not None:
        raw['workers'] = workers
    if output_dir is not None:
        raw['output_dir'] = str(output_dir)
    plan = RunPlan.from_dict(raw, path.parent)
    logger.info(f'Loaded {plan!r} from {path}')
    return plan


def _distill_config(plan: RunPlan, method: DistillMethod, space: DistillSpace, output: OutputKind, ipc: int, seed: int) -> DistillConfig:
    return DistillConfig(
        method=method, ipc=ipc, space=space, output=output, seed=seed,
        restarts=plan.restarts, max_iter=plan.max_iter, kip=plan.kip, gm=plan.gm,
    )


def _valid_outputs(method: DistillMethod, outputs: Sequence[OutputKind]) -> Iterator[OutputKind]:
    for output in outputs:
        if output is OutputKind.closest_real and (method is DistillMethod.random or not method.selects_real_points):
            continue
        yield output


def expand(plan: RunPlan) -> list[PlanEntry]:
    """Every run of the plan in a fixed order.

    Vanilla entries distill in the original space, encoder entries in the
    latent space. Closest-real outputs are only paired with the clustering
    methods.
    """
    entries = []
    for dataset in plan.datasets:
        for encoder in plan.encoders:
            space = DistillSpace.original if encoder is None else DistillSpace.latent
            for method in plan.methods:
                for output in _valid_outputs(method, plan.outputs):
                    for ipc in plan.ipc:
                        for seed in plan.seeds:
                            entries.append(PlanEntry(dataset, encoder, _distill_config(plan, method, space, output, ipc, seed)))
    return entries


def baseline_entries(plan: RunPlan, dataset: DatasetEntry) -> list[PlanEntry]:
    """Random selection at the reference ipc for every baseline seed."""
    return [
        PlanEntry(dataset, None, _distill_config(
            plan, DistillMethod.random, DistillSpace.original, OutputKind.as_is, RANDOM_BASELINE_IPC, seed,
        ))
        for seed in plan.baseline_seeds
    ]
