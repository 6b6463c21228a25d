from .config import ExperimentConfig, load_config, parse_config
from .runs import RunResult, read_data_csv, read_pbm, run

__all__ = ["ExperimentConfig", "load_config", "parse_config", "RunResult", "read_data_csv", "read_pbm", "run"]
