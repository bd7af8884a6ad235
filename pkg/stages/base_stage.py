from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, Optional, Union
import hashlib
import json
import logging

import pandas as pd

from imaging.raster import GrayImage
from utils.errors import DualBandError, StageError
from utils.pgm_io import encode_pgm
from utils.report_schema import StageResult

logger = logging.getLogger(__name__)


def dump_json(payload: Any) -> str:
    """Byte-stable JSON: sorted keys, fixed indent, trailing newline."""
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


class BaseStage(ABC):
    """One step of the acquisition and analysis pipeline.

    Stages read their inputs from a shared context dict, add their products to it,
    and record every file they write together with its SHA-256 digest.
    """

    def __init__(self, name: str, out_dir: Optional[Union[str, Path]] = None):
        self.name = name
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.artifacts: Dict[str, str] = {}

    def _write_bytes(self, filename: str, payload: bytes) -> Optional[Path]:
        if self.out_dir is None:
            return None
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / filename
        path.write_bytes(payload)
        self.artifacts[filename] = hashlib.sha256(payload).hexdigest()
        logger.debug(f"{self.name}: wrote {path}")
        return path

    def write_image(self, filename: str, img: GrayImage) -> Optional[Path]:
        return self._write_bytes(filename, encode_pgm(img))

    def write_json(self, filename: str, payload: Any) -> Optional[Path]:
        return self._write_bytes(filename, dump_json(payload).encode("utf-8"))

    def write_table(self, filename: str, frame: pd.DataFrame) -> Optional[Path]:
        return self._write_bytes(filename, frame.to_csv(index=False, lineterminator="\n").encode("utf-8"))

    def run(self, context: Dict[str, Any]) -> StageResult:
        """Run the stage, tagging any failure with the stage name."""
        logger.info(f"stage {self.name}: start")
        try:
            result = self.process(context)
        except StageError:
            raise
        except DualBandError as e:
            logger.error(f"stage {self.name} failed: {e}")
            raise StageError(self.name, str(e)) from e
        result.artifacts.update(self.artifacts)
        context.setdefault("stages", []).append(result)
        logger.info(f"stage {self.name}: done")
        return result

    @abstractmethod
    def process(self, context: Dict[str, Any]) -> StageResult:
        """Consume inputs from the context, add products to it, and summarise"""
        pass
