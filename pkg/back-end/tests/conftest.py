import json
from fractions import Fraction

import pytest
from hypothesis import settings as hypothesis_settings

from app.core.tensor_space import ModelParams, PhiMap, WSpace, nasty_vector, rank_one

hypothesis_settings.register_profile("workbench", max_examples=60, deadline=None)
hypothesis_settings.load_profile("workbench")


@pytest.fixture
def m3l1() -> ModelParams:
    return ModelParams(3, 1)


@pytest.fixture
def d1_space(m3l1) -> WSpace:
    """W = span{D_1⊗1} for m=3, ℓ=1."""
    return WSpace(m3l1, (rank_one(nasty_vector(1, m3l1), (1,)),))


@pytest.fixture
def identity_phi(d1_space) -> PhiMap:
    """φ(D_1) = D_1, so θ = (D_1)_1 = 2."""
    return PhiMap(d1_space, (nasty_vector(1, d1_space.params),))


@pytest.fixture
def weak_phi(d1_space) -> PhiMap:
    """φ(D_1) = (0, 1, -1), weakly cancelling."""
    return PhiMap(d1_space, ((0, 1, -1),))


def make_config(m, ell, w_basis=(), phi_images=(), **extra) -> dict:
    config = {
        "m": m,
        "ell": ell,
        "w_basis": [[[str(Fraction(x)) for x in row] for row in tensor] for tensor in w_basis],
        "phi_images": [[str(Fraction(x)) for x in image] for image in phi_images],
    }
    config.update(extra)
    return config


@pytest.fixture
def weak_config() -> dict:
    return make_config(3, 1, [[[2], [-1], [-1]]], [[0, 1, -1]])


@pytest.fixture
def blow_up_config() -> dict:
    return make_config(3, 1, [[[2], [-1], [-1]]], [[2, -1, -1]])


@pytest.fixture
def write_config(tmp_path):
    def _write(config: dict, name: str = "problem.json"):
        path = tmp_path / name
        path.write_text(json.dumps(config), encoding="utf-8")
        return path

    return _write
