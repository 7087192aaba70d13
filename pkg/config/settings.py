"""Runtime settings and logging setup"""
import logging
import os
from dataclasses import dataclass
from typing import Optional

from dotenv import load_dotenv
from pythonjsonlogger.json import JsonFormatter

load_dotenv()

TEXT_LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


@dataclass(frozen=True)
class Settings:
    """Process-wide knobs, read once from the environment (and .env)"""
    log_level: str = "INFO"
    log_format: str = "text"
    max_workers: int = 4
    leak_threshold: float = 1e-6
    norm_epsilon: float = 1e-10
    output_dir: str = "results"

    @classmethod
    def from_env(cls) -> "Settings":
        return cls(
            log_level=os.getenv('CONDSQUEEZE_LOG_LEVEL', 'INFO').upper(),
            log_format=os.getenv('CONDSQUEEZE_LOG_FORMAT', 'text').lower(),
            max_workers=int(os.getenv('CONDSQUEEZE_MAX_WORKERS', '4')),
            leak_threshold=float(os.getenv('CONDSQUEEZE_LEAK_THRESHOLD', '1e-6')),
            norm_epsilon=float(os.getenv('CONDSQUEEZE_NORM_EPSILON', '1e-10')),
            output_dir=os.getenv('CONDSQUEEZE_OUTPUT_DIR', 'results'),
        )


settings = Settings.from_env()


def setup_logging(level: Optional[str] = None, log_format: Optional[str] = None) -> None:
    """Configure the root logger with the text or JSON formatter"""
    level = (level or settings.log_level).upper()
    log_format = (log_format or settings.log_format).lower()

    handler = logging.StreamHandler()
    if log_format == 'json':
        handler.setFormatter(JsonFormatter('%(asctime)s %(name)s %(levelname)s %(message)s'))
    else:
        handler.setFormatter(logging.Formatter(TEXT_LOG_FORMAT))

    root = logging.getLogger()
    for existing in list(root.handlers):
        root.removeHandler(existing)
    root.addHandler(handler)
    root.setLevel(level)
