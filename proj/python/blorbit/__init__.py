"""Birkhoff-Lewis periodic orbits for the beam and smoothing-NLS models."""

import json
import os

from ._blorbit import Session as _Session
from ._blorbit import run_pipeline as _run_pipeline

__all__ = ["Session", "open_config", "run_pipeline"]


def _config_text(config):
    if isinstance(config, dict):
        return json.dumps(config)
    if isinstance(config, (str, os.PathLike)) and os.path.exists(config):
        with open(config) as f:
            return f.read()
    return str(config)


class Session(_Session):
    """A config with its normal form; the range context is built on first use."""

    def __init__(self, config):
        super().__init__(_config_text(config))

    def verify(self, orbit):
        return json.loads(super().verify(orbit if isinstance(orbit, str) else orbit["orbit_json"]))


def open_config(config):
    return Session(config)


def run_pipeline(config):
    return json.loads(_run_pipeline(_config_text(config)))
