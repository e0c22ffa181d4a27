import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dropstokes.fields import PhaseParams
from dropstokes.geometry import Geometry


@pytest.fixture
def geom_small():
    return Geometry(R=1.0, R_Omega=2.5, n_theta=32, n_r1=32, n_r2=32)


@pytest.fixture
def geom_default():
    return Geometry(R=2.0, R_Omega=5.0, a=1.8, n_theta=32, n_r1=48, n_r2=48)


@pytest.fixture
def params_unit():
    return PhaseParams()


@pytest.fixture
def params_contrast():
    return PhaseParams(rho1=2.0, rho2=1.0, mu1=3.0, mu2=1.0, sigma=0.8)
