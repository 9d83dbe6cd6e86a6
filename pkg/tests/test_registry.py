import json

import pytest

from quantplan.errors import ValidationError
from quantplan.registry import (
    MetricSpec,
    QuantType,
    UniformQoSMatrix,
    WeightVector,
    load_qos_matrix,
    load_registry,
    save_qos_matrix,
    save_registry,
)

from factories import make_matrix, make_registry


class TestLoadRegistry:
    def test_kquants_ranks_derived_from_effective_bits(self, kquants_registry_file):
        reg = load_registry(kquants_registry_file)
        assert len(reg.types) == 5
        # least aggressive first
        assert [t.name for t in reg.types] == ["q8_0", "q6_K", "q5_K", "q4_K", "q3_K"]
        assert [t.rank for t in reg.types] == [1, 2, 3, 4, 5]
        by_name = {t.name: t for t in reg.types}
        assert by_name["q3_K"].rank == 5
        assert by_name["q8_0"].rank == 1

    def test_single_type(self, tmp_path):
        path = tmp_path / "r.json"
        path.write_text(
            json.dumps(
                {
                    "types": [{"name": "q4_0", "nominal_bits": 4, "effective_bits": 4.5}],
                    "metrics": [{"name": "memory", "unit": "GB", "direction": "cost"}],
                }
            )
        )
        reg = load_registry(path)
        assert len(reg.types) == 1
        assert reg.types[0].rank == 1

    def test_duplicate_name_rejected(self, tmp_path):
        path = tmp_path / "r.json"
        path.write_text(
            json.dumps(
                {
                    "types": [
                        {"name": "q4", "nominal_bits": 4, "effective_bits": 4.5},
                        {"name": "q4", "nominal_bits": 4, "effective_bits": 4.6},
                    ],
                    "metrics": [{"name": "memory", "unit": "GB", "direction": "cost"}],
                }
            )
        )
        with pytest.raises(ValidationError, match="duplicate"):
            load_registry(path)

    def test_explicit_ranks_override(self, tmp_path):
        path = tmp_path / "r.json"
        path.write_text(
            json.dumps(
                {
                    "types": [
                        {"name": "a", "nominal_bits": 2, "effective_bits": 2.5, "rank": 2},
                        {"name": "b", "nominal_bits": 4, "effective_bits": 4.5, "rank": 1},
                    ],
                    "metrics": [{"name": "memory", "unit": "GB", "direction": "cost"}],
                }
            )
        )
        reg = load_registry(path)
        assert [t.name for t in reg.types] == ["b", "a"]

    def test_non_contiguous_ranks_rejected(self, tmp_path):
        path = tmp_path / "r.json"
        path.write_text(
            json.dumps(
                {
                    "types": [
                        {"name": "a", "nominal_bits": 2, "effective_bits": 2.5, "rank": 1},
                        {"name": "b", "nominal_bits": 4, "effective_bits": 4.5, "rank": 3},
                    ],
                    "metrics": [{"name": "memory", "unit": "GB", "direction": "cost"}],
                }
            )
        )
        with pytest.raises(ValidationError, match="contiguous"):
            load_registry(path)

    def test_partial_ranks_rejected(self, tmp_path):
        path = tmp_path / "r.json"
        path.write_text(
            json.dumps(
                {
                    "types": [
                        {"name": "a", "nominal_bits": 2, "effective_bits": 2.5, "rank": 1},
                        {"name": "b", "nominal_bits": 4, "effective_bits": 4.5},
                    ],
                    "metrics": [{"name": "memory", "unit": "GB", "direction": "cost"}],
                }
            )
        )
        with pytest.raises(ValidationError, match="rank"):
            load_registry(path)

    def test_non_positive_bits_rejected(self, tmp_path):
        path = tmp_path / "r.json"
        path.write_text(
            json.dumps(
                {
                    "types": [{"name": "a", "nominal_bits": 0, "effective_bits": 2.5}],
                    "metrics": [{"name": "memory", "unit": "GB", "direction": "cost"}],
                }
            )
        )
        with pytest.raises(ValidationError, match="positive"):
            load_registry(path)

    def test_parse_error(self, tmp_path):
        path = tmp_path / "r.json"
        path.write_text("{not json")
        with pytest.raises(ValidationError, match="JSON"):
            load_registry(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValidationError, match="not found"):
            load_registry(tmp_path / "nope.json")


class TestQosMatrix:
    def test_llama31_loads_aligned(self, kquants_registry_file, llama31_qos_file):
        reg = load_registry(kquants_registry_file)
        mat = load_qos_matrix(llama31_qos_file, reg)
        assert len(mat.values) == 5
        assert len(mat.values[0]) == 2
        by_name = dict(zip((t.name for t in mat.types), mat.values))
        assert by_name["q3_K"] == (3.21, 232.0)
        assert by_name["q8_0"] == (8.0, 133.3)
        # rows follow registry order, least aggressive first
        assert mat.values[0] == (8.0, 133.3)

    def test_phi35_row_verbatim(self, kquants_registry_file, tmp_path):
        reg = load_registry(kquants_registry_file)
        path = tmp_path / "phi.csv"
        path.write_text(
            "type,memory,latency\n"
            "q3_K,1.53,133.5\nq4_K,2.0,76.6\nq5_K,2.45,82.7\nq6_K,2.92,108.7\nq8_0,3.78,106.3\n"
        )
        mat = load_qos_matrix(path, reg)
        by_name = dict(zip((t.name for t in mat.types), mat.values))
        assert by_name["q4_K"] == (2.0, 76.6)

    def test_row_order_insensitive(self, kquants_registry_file, tmp_path):
        reg = load_registry(kquants_registry_file)
        path = tmp_path / "shuffled.csv"
        path.write_text(
            "type,latency,memory\n"
            "q8_0,133.3,8\nq3_K,232.0,3.21\nq5_K,138.7,5.14\nq6_K,191.2,6.14\nq4_K,123.9,4.21\n"
        )
        mat = load_qos_matrix(path, reg)
        assert mat.values[0] == (8.0, 133.3)
        assert mat.values[-1] == (3.21, 232.0)

    def test_negative_cost_rejected(self, kquants_registry_file, tmp_path):
        reg = load_registry(kquants_registry_file)
        path = tmp_path / "bad.csv"
        path.write_text(
            "type,memory,latency\n"
            "q3_K,3.21,-1\nq4_K,4.21,123.9\nq5_K,5.14,138.7\nq6_K,6.14,191.2\nq8_0,8,133.3\n"
        )
        with pytest.raises(ValidationError, match="positive"):
            load_qos_matrix(path, reg)

    def test_non_finite_rejected(self, kquants_registry_file, tmp_path):
        reg = load_registry(kquants_registry_file)
        path = tmp_path / "bad.csv"
        path.write_text(
            "type,memory,latency\n"
            "q3_K,3.21,nan\nq4_K,4.21,123.9\nq5_K,5.14,138.7\nq6_K,6.14,191.2\nq8_0,8,133.3\n"
        )
        with pytest.raises(ValidationError, match="non-finite"):
            load_qos_matrix(path, reg)

    def test_missing_type_row(self, kquants_registry_file, tmp_path):
        reg = load_registry(kquants_registry_file)
        path = tmp_path / "short.csv"
        path.write_text("type,memory,latency\nq3_K,3.21,232.0\n")
        with pytest.raises(ValidationError, match="missing"):
            load_qos_matrix(path, reg)

    def test_unknown_type_row(self, kquants_registry_file, llama31_qos_file, tmp_path):
        reg = load_registry(kquants_registry_file)
        path = tmp_path / "extra.csv"
        path.write_text(llama31_qos_file.read_text() + "q2_K,2.5,300.0\n")
        with pytest.raises(ValidationError, match="unknown"):
            load_qos_matrix(path, reg)


class TestRoundTrip:
    def test_registry_round_trip(self, kquants_registry_file, tmp_path):
        reg = load_registry(kquants_registry_file)
        out = tmp_path / "saved.json"
        save_registry(reg, out)
        again = load_registry(out)
        assert again == reg

    def test_matrix_round_trip(self, kquants_registry_file, llama31_qos_file, tmp_path):
        reg = load_registry(kquants_registry_file)
        mat = load_qos_matrix(llama31_qos_file, reg)
        out = tmp_path / "saved.csv"
        save_qos_matrix(mat, out)
        again = load_qos_matrix(out, reg)
        assert again == mat


class TestWeightVector:
    def test_valid(self):
        w = WeightVector((0.7, 0.15, 0.15))
        assert list(w) == [0.7, 0.15, 0.15]

    def test_out_of_range(self):
        with pytest.raises(ValidationError):
            WeightVector((1.2, 0.0))
        with pytest.raises(ValidationError):
            WeightVector((-0.1, 0.5))

    def test_all_zero_rejected(self):
        with pytest.raises(ValidationError):
            WeightVector((0.0, 0.0, 0.0))

    def test_sum_not_required_to_be_one(self):
        WeightVector((0.7, 0.1, 0.1))  # fine


class TestDomainTypes:
    def test_effective_bits_below_nominal_rejected(self):
        with pytest.raises(ValidationError):
            QuantType(name="x", nominal_bits=4, effective_bits=3.9, rank=1)

    def test_bad_direction(self):
        with pytest.raises(ValidationError):
            MetricSpec(name="memory", unit="GB", direction="down")

    def test_matrix_validates_row_shape(self):
        reg = make_registry(2, 2)
        with pytest.raises(ValidationError):
            UniformQoSMatrix(types=reg.types, metrics=reg.metrics, values=((1.0,), (2.0, 3.0)))

    def test_benefit_metric_may_be_zero(self):
        reg = make_registry(1, 1, directions=["benefit"])
        make_matrix(reg, [[0.0]])
