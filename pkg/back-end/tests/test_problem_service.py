import json

import pytest
from pydantic import ValidationError

from conftest import make_config

from app.core.fourier_side import GroupStructure
from app.core.tensor_space import ModelParams, WSpace
from app.exceptions import ConfigValidationError
from app.services.problem_service import problem_service


class TestParse:
    def test_rationals_are_canonical(self):
        raw = {"m": 2, "ell": 1, "w_basis": [[["6/8"], [-0.75]]], "phi_images": [["1/2", "-0.5"]]}
        config = problem_service.parse(raw)
        assert config.w_basis == [[["3/4"], ["-3/4"]]]
        assert config.phi_images == [["1/2", "-1/2"]]

    def test_decimal_numbers_are_read_exactly(self):
        text = '{"m": 2, "ell": 1, "w_basis": [[[0.1], [-0.1]]], "phi_images": [[0.3, -0.3]]}'
        config = problem_service.parse(text)
        assert config.w_basis == [[["1/10"], ["-1/10"]]]
        assert config.phi_images == [["3/10", "-3/10"]]

    def test_json_text(self, weak_config):
        config = problem_service.parse(json.dumps(weak_config))
        assert (config.m, config.ell) == (3, 1)

    @pytest.mark.parametrize(
        "config",
        [
            make_config(3, 1, [[[1], [-1]]], [[0, 0, 0]]),
            make_config(3, 1, [[[1], [-1], [0]]], []),
            make_config(3, 1, [[[1], [-1], [0]]], [[0, 0]]),
            make_config(1, 1),
            {"m": 2, "ell": 1, "w_basis": [[["x"], ["1"]]], "phi_images": [[0, 0]]},
        ],
    )
    def test_shape_errors(self, config):
        with pytest.raises(ValidationError):
            problem_service.parse(config)


class TestBuild:
    def test_weak_example(self, weak_config):
        problem = problem_service.build(problem_service.parse(weak_config))
        assert problem.w.dim == 1
        assert problem.phi.images == ((0, 1, -1),)
        assert problem.group is None

    @pytest.mark.parametrize(
        "config, location",
        [
            (make_config(2, 2, [[[1, 0], [-1, 1]]], [[0, 0]]), "w_basis[0]"),
            (make_config(2, 1, [[[1], [-1]], [[2], [-2]]], [[0, 0], [0, 0]]), "w_basis[1]"),
            (make_config(2, 1, [[[1], [-1]]], [[1, 0]]), "phi_images[0]"),
            (make_config(3, 1, [[[1], [-1], [0]]], [[0, 0, 0]], group=[2]), "group"),
            (make_config(4, 1, group=[1, 4]), "group"),
        ],
    )
    def test_error_locations(self, config, location):
        with pytest.raises(ConfigValidationError) as info:
            problem_service.build(problem_service.parse(config))
        assert info.value.location == location
        assert str(info.value).startswith(location)

    def test_group(self):
        problem = problem_service.build(problem_service.parse(make_config(4, 1, group=[2, 2])))
        assert problem.group == GroupStructure((2, 2))


class TestLoad:
    def test_round_trip_through_file(self, weak_config, write_config, tmp_path):
        config = problem_service.load(write_config(weak_config))
        path = tmp_path / "again.json"
        path.write_text(problem_service.serialize(config), encoding="utf-8")
        assert problem_service.load(path) == config

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigValidationError):
            problem_service.load(tmp_path / "absent.json")

    def test_from_objects(self, d1_space, weak_phi):
        config = problem_service.from_objects(d1_space, weak_phi.images, GroupStructure((3,)), depth=4)
        problem = problem_service.build(config)
        assert problem.w.basis == d1_space.basis
        assert problem.phi.images == weak_phi.images
        assert config.depth == 4

    def test_empty_w(self):
        config = problem_service.from_objects(WSpace.zero(ModelParams(3, 2)), ())
        assert problem_service.build(config).w.dim == 0
