"""Python access to the native dynamic-graph link prediction engine."""

import csv
import io
import json

from ._tawrmac import (
    ConfigError,
    NumericError,
    auc_roc,
    average_precision,
    chrono_split,
    gradcheck,
    load_jodie_csv,
    sample_walks,
    spearman,
    synthetic_stream,
)
from . import _tawrmac

__all__ = [
    "ConfigError",
    "NumericError",
    "auc_roc",
    "average_precision",
    "chrono_split",
    "default_config",
    "gradcheck",
    "load_jodie_csv",
    "run",
    "sample_walks",
    "spearman",
    "synthetic_stream",
    "validate_config",
]


def default_config():
    return json.loads(_tawrmac.default_config())


def validate_config(config):
    return json.loads(_tawrmac.validate_config(json.dumps(config)))


def run(config, write_outputs=False):
    """Train and evaluate one configuration.

    Returns (rows, summary): rows are dicts with dataset, setting, nss, seed,
    epoch, ap, auc.
    """
    text, summary = _tawrmac.run_experiment(json.dumps(config), write_outputs)
    rows = []
    for row in csv.DictReader(io.StringIO(text)):
        row["seed"] = int(row["seed"])
        row["epoch"] = int(row["epoch"])
        row["ap"] = float(row["ap"])
        row["auc"] = float(row["auc"])
        rows.append(row)
    return rows, json.loads(summary)
