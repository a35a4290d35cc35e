"""XDG-compliant config and cache locations."""

from __future__ import annotations

import os
from pathlib import Path


def config_dir() -> Path:
    """Return ~/.config/potdep, creating it if needed."""
    xdg = os.environ.get("XDG_CONFIG_HOME")
    p = Path(xdg) / "potdep" if xdg else Path.home() / ".config" / "potdep"
    p.mkdir(parents=True, exist_ok=True)
    return p


def default_config_path() -> Path:
    """Return the default config file path."""
    return config_dir() / "config.toml"


def cache_dir() -> Path:
    """Return ~/.cache/potdep, creating it if needed."""
    xdg = os.environ.get("XDG_CACHE_HOME")
    p = Path(xdg) / "potdep" if xdg else Path.home() / ".cache" / "potdep"
    p.mkdir(parents=True, exist_ok=True)
    return p


def truths_path(version: int) -> Path:
    """Return the path of the versioned oracle constants file."""
    return cache_dir() / f"truths-v{version}.json"
