import hashlib
import json
import logging
import sys
from pathlib import Path
from typing import Optional

import pandas as pd

from uvm_pricer.cli.config import ExperimentConfig

logger = logging.getLogger(__name__)


def config_hash(cfg: ExperimentConfig) -> str:
    """Digest of the resolved configuration, excluding where and how it is written."""
    resolved = cfg.model_dump(mode="json", exclude={"output"})
    return hashlib.md5(json.dumps(resolved, sort_keys=True).encode()).hexdigest()


def render(table: pd.DataFrame, fmt: str) -> str:
    if fmt == "json":
        return table.to_json(orient="records", indent=2, double_precision=15) + "\n"
    return table.to_csv(index=False)


def write_table(table: pd.DataFrame, path: Optional[str], fmt: str) -> None:
    text = render(table, fmt)
    if path is None:
        sys.stdout.write(text)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text)
    logger.info(f"Wrote {len(table)} rows to {path}", extra={"format": fmt})
