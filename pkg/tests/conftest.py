"""Shared test fixtures.

`fixture_tree` builds the synthetic corpus once per session; `cli_run`
invokes the command-line entry point in-process and captures its output.
"""

from __future__ import annotations

from pathlib import Path

import pytest

from vadbench import cli, fixtures


@pytest.fixture(scope="session")
def fixture_tree(tmp_path_factory) -> dict:
    """Session-scoped synthetic corpus: clean speech, noise speakers, noise clips."""
    root = tmp_path_factory.mktemp("fixture_corpus")
    summary = fixtures.build_fixture_corpus(root, master_seed=20240601)
    return {
        "root": Path(root),
        "clean": Path(summary.clean_dir),
        "noisesrc": Path(summary.noisesrc_dir),
        "noiseclips": Path(summary.noiseclips_dir),
        "summary": summary,
    }


@pytest.fixture
def cli_run(capsys):
    """Run the CLI in-process; returns (exit_code, stdout, stderr)."""

    def run(*args) -> tuple[int, str, str]:
        code = cli.main([str(a) for a in args])
        captured = capsys.readouterr()
        return code, captured.out, captured.err

    return run
