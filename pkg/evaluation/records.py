from __future__ import annotations

from enum import Enum
from typing import Any, NamedTuple, TYPE_CHECKING

from errors import ContractError

if TYPE_CHECKING:
    from typing import Self

__all__ = (
    'RunStatus',
    'Representation',
    'RunRecord',
    'RECORD_COLUMNS',
    'STAGE_SECONDS',
    'FULL_METHOD',
    'RANDOM_BASELINE_IPC',
)

FULL_METHOD = 'full'
RANDOM_BASELINE_IPC = 10


class RunStatus(Enum):
    ok = 'ok'
    failed = 'failed'


class Representation(Enum):
    """Feature space the downstream classifier is trained and tested in."""
    original = 'original'
    encoded = 'encoded'
    decoded = 'decoded'


class RunRecord(NamedTuple):
    """Provenance and metrics of one pipeline execution.

    ``encoder`` is ``none`` for vanilla pipelines and the architecture tag,
    starred when supervised fine-tuning ran (``tf*``), otherwise. Failed runs
    carry ``stage`` and ``message`` and no accuracy.

    The ``*_seconds`` fields hold wall-clock time per stage. Autoencoder
    training (fine-tuning included) and encoding run once per dataset and
    encoder, and every record built on them carries that one-off cost.
    ``seconds`` is the total, classifier prediction included.
    """

    dataset: str
    encoder: str
    method: str
    space: str
    representation: str
    ipc: int
    seed: int
    classifier: str
    balanced_accuracy: float | None
    status: str = RunStatus.ok.value
    stage: str = ''
    message: str = ''
    seconds: float = 0.0
    plan_hash: str = ''
    distilled_path: str = ''
    minority_ratio: float = 0.0
    autoencoder_seconds: float = 0.0
    encode_seconds: float = 0.0
    distill_seconds: float = 0.0
    decode_seconds: float = 0.0
    fit_seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status == RunStatus.ok.value

    @property
    def competitor(self) -> str:
        """Pipeline identity compared across groups: ``encoder/method/space/representation``."""
        return f'{self.encoder}/{self.method}/{self.space}/{self.representation}'

    @property
    def is_baseline(self) -> bool:
        return self.encoder == 'none' and (
            self.method == FULL_METHOD or (self.method == 'random' and self.ipc == RANDOM_BASELINE_IPC)
        )

    def checked(self) -> RunRecord:
        if self.ok and (self.balanced_accuracy is None or not 0.0 <= self.balanced_accuracy <= 1.0):
            raise ContractError(f'balanced accuracy must lie in [0, 1], got {self.balanced_accuracy!r}')
        return self

    @classmethod
    def failure(cls, stage: str, error: BaseException, **fields: Any) -> Self:
        return cls(
            balanced_accuracy=None, status=RunStatus.failed.value,
            stage=stage, message=f'{type(error).__name__}: {error}', **fields,
        )

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> Self:
        return cls(**{name: raw[name] for name in cls._fields if name in raw})

    def to_dict(self) -> dict[str, Any]:
        return self._asdict()

    def __repr__(self) -> str:
        accuracy = 'failed' if self.balanced_accuracy is None else f'{self.balanced_accuracy:.4f}'
        return (
            f'<RunRecord {self.dataset} {self.competitor} ipc={self.ipc} seed={self.seed} '
            f'{self.classifier}={accuracy}>'
        )


RECORD_COLUMNS = RunRecord._fields
STAGE_SECONDS = tuple(name for name in RECORD_COLUMNS if name.endswith('_seconds'))
