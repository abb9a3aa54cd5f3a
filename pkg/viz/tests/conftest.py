import shutil
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"


@pytest.fixture()
def ref_runs():
    """The two shipped reference run directories."""
    return [DATA / "refrun" / "drmmd", DATA / "refrun" / "mmd"]


@pytest.fixture()
def scratch_run(tmp_path, ref_runs):
    """A mutable copy of one reference run directory."""
    dst = tmp_path / "run"
    shutil.copytree(ref_runs[0], dst)
    return dst
