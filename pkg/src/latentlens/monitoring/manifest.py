"""Run manifest: per-stage status, timing and outputs of one output directory."""

import json
import logging
import os
import tempfile
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from latentlens import __version__

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


@dataclass
class StageRecord:
    status: str = "pending"
    digest: Optional[str] = None
    version: Optional[str] = None
    started: Optional[str] = None
    finished: Optional[str] = None
    duration_seconds: Optional[float] = None
    outputs: List[str] = field(default_factory=list)
    error: Optional[str] = None


@dataclass
class RunManifest:
    """Bookkeeping for every stage run into one output directory.

    A stage is complete for a config when it finished with the same config
    digest and tool version and all of its outputs still exist.
    """

    path: Path
    digest: Optional[str] = None
    version: str = __version__
    created: str = field(default_factory=lambda: datetime.now().isoformat())
    updated: Optional[str] = None
    stages: Dict[str, StageRecord] = field(default_factory=dict)

    @classmethod
    def load(cls, out_dir: Union[str, Path]) -> "RunManifest":
        """Read ``manifest.json`` from ``out_dir``, or start an empty manifest."""
        path = Path(out_dir) / MANIFEST_NAME
        if not path.exists():
            return cls(path=path)
        data = json.loads(path.read_text(encoding="utf-8"))
        stages = {name: StageRecord(**record) for name, record in data.get("stages", {}).items()}
        return cls(
            path=path,
            digest=data.get("digest"),
            version=data.get("version", __version__),
            created=data.get("created", datetime.now().isoformat()),
            updated=data.get("updated"),
            stages=stages,
        )

    def is_complete(self, stage: str, digest: str) -> bool:
        record = self.stages.get(stage)
        if record is None or record.status != "completed":
            return False
        if record.digest != digest or record.version != __version__:
            return False
        return all(Path(p).exists() for p in record.outputs)

    def start(self, stage: str, digest: str) -> None:
        self.digest = digest
        self.stages[stage] = StageRecord(
            status="running", digest=digest, version=__version__, started=datetime.now().isoformat()
        )
        self.save()

    def complete(self, stage: str, outputs: List[Union[str, Path]]) -> None:
        """Mark a stage completed; any listed output that does not exist fails it instead."""
        record = self.stages[stage]
        record.outputs = sorted(str(p) for p in outputs)
        missing = [p for p in record.outputs if not Path(p).exists()]
        if missing:
            self.fail(stage, f"outputs missing after run: {missing}")
            return
        record.status = "completed"
        self._finish(record)
        logger.info(f"Stage '{stage}' completed in {record.duration_seconds:.1f}s ({len(outputs)} outputs)")

    def fail(self, stage: str, error: str) -> None:
        record = self.stages[stage]
        record.status = "failed"
        record.error = error
        self._finish(record)
        logger.warning(f"Stage '{stage}' failed: {error}")

    def _finish(self, record: StageRecord) -> None:
        finished = datetime.now()
        record.finished = finished.isoformat()
        if record.started:
            record.duration_seconds = (finished - datetime.fromisoformat(record.started)).total_seconds()
        self.save()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "digest": self.digest,
            "version": self.version,
            "created": self.created,
            "updated": self.updated,
            "stages": {name: asdict(record) for name, record in sorted(self.stages.items())},
        }

    def save(self) -> Path:
        """Write the manifest atomically (temp file in the same directory, then rename)."""
        self.updated = datetime.now().isoformat()
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.path.parent, prefix=".manifest-", suffix=".json")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                json.dump(self.to_dict(), f, indent=2)
                f.write("\n")
            os.replace(tmp, self.path)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        return self.path
