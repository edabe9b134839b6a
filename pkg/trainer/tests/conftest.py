"""Shared helpers: every interaction with the pruning tool goes through its
CLI and file formats — the external interfaces — never its Python API."""

import functools
import json
import subprocess
import sys
import tempfile
from pathlib import Path

import pytest


def primary_cli(*args: str) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "prunekit", *args], capture_output=True, text=True)


@functools.lru_cache(maxsize=None)
def export_arch(name: str) -> str:
    result = primary_cli("zoo", "export", name)
    assert result.returncode == 0, result.stderr
    return result.stdout


@functools.lru_cache(maxsize=None)
def engine_totals(arch_source: str) -> dict:
    """The pruning engine's cost totals for a zoo name or document path."""
    with tempfile.TemporaryDirectory() as tmp:
        result = primary_cli("inspect", "--arch", arch_source, "--out", tmp)
        assert result.returncode == 0, result.stderr
        return json.loads((Path(tmp) / "profile.json").read_text())["totals"]


@pytest.fixture(scope="session")
def pruned_vgg(tmp_path_factory):
    """A pruned VGG-16 document produced by the pruning CLI."""
    out = tmp_path_factory.mktemp("pruned_vgg")
    result = primary_cli("prune", "--arch", "vgg16_cifar10", "--mode", "params",
                         "--target-frac", "0.5", "--ratio", "0.1", "--seed", "7",
                         "--out", str(out))
    assert result.returncode == 0, result.stderr
    return out / "pruned.json"
