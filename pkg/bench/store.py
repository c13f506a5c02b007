from __future__ import annotations

import json
import logging
from pathlib import Path
from threading import Lock
from typing import Iterable

from distill import DistilledSet
from errors import SchemaError
from evaluation import RunRecord

__all__ = ('ResultsStore', 'RECORDS_FILE', 'record_key')

logger = logging.getLogger(__name__)

RECORDS_FILE = 'records.jsonl'


def record_key(record: RunRecord) -> tuple:
    """Identity of a run; reruns of the same plan produce records with equal keys."""
    return (
        record.dataset, record.encoder, record.method, record.space,
        record.representation, record.ipc, record.seed, record.classifier,
    )


class ResultsStore:
    """Append-only JSON-lines log of run records plus artifact directories.

    Appends are serialized through a lock, so worker threads may share one
    store.
    """

    __slots__ = ('root', '_lock')

    def __init__(self, root: str | Path) -> None:
        self.root: Path = Path(root)
        self._lock: Lock = Lock()

    @property
    def records_path(self) -> Path:
        return self.root / RECORDS_FILE

    @property
    def tables_dir(self) -> Path:
        return self.root / 'tables'

    @property
    def checkpoint_dir(self) -> Path:
        return self.root / 'checkpoints'

    @property
    def distilled_dir(self) -> Path:
        return self.root / 'distilled'

    def append(self, records: Iterable[RunRecord]) -> int:
        lines = [json.dumps(record.to_dict(), sort_keys=True) + '\n' for record in records]
        if not lines:
            return 0
        with self._lock:
            self.root.mkdir(parents=True, exist_ok=True)
            with open(self.records_path, 'a', encoding='utf-8') as f:
                f.writelines(lines)
                f.flush()
        return len(lines)

    def read(self) -> list[RunRecord]:
        if not self.records_path.exists():
            return []
        records = []
        with open(self.records_path, encoding='utf-8') as f:
            for number, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    records.append(RunRecord.from_dict(json.loads(line)))
                except (json.JSONDecodeError, TypeError) as e:
                    raise SchemaError(f'{self.records_path}:{number}: malformed record ({e})') from e
        return records

    def latest(self, plan_hash: str | None = None) -> list[RunRecord]:
        """The most recent record per run identity, ordered by identity.

        With ``plan_hash``, records of other plans are dropped before the
        newest record per identity is chosen.
        """
        records = self.read()
        if plan_hash is not None:
            records = [record for record in records if record.plan_hash == plan_hash]
        newest = {record_key(record): record for record in records}
        return [newest[key] for key in sorted(newest)]

    def save_distilled(self, distilled: DistilledSet, relative: str) -> str:
        distilled.save(self.distilled_dir / relative)
        return f'distilled/{relative}'

    def load_distilled(self, relative: str) -> DistilledSet:
        return DistilledSet.load(self.root / relative)

    def __repr__(self) -> str:
        return f'<ResultsStore root={str(self.root)!r}>'
