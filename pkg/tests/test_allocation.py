import json

import pytest

from quantplan.allocation import (
    allocate,
    average_effective_bits,
    build_manifest,
    default_tensor_pattern,
    emit_manifest,
    manifest_type_counts,
    parse_manifest,
    sublayer_of,
    type_share_percent,
)
from quantplan.compositions import Composition
from quantplan.contribution import ContributionScore
from quantplan.errors import ValidationError
from quantplan.registry import QuantType, WeightVector

from factories import kquants_registry, make_registry


def mk_scores(values):
    scores = []
    for i, v in enumerate(values):
        reward, penalty = (v, 0) if v >= 0 else (0, -v)
        scores.append(
            ContributionScore(layer_id=i, kind="attention", reward=reward, penalty=penalty)
        )
    return scores


def scaled_scores(floats):
    # contribution scores are integers; scale float examples up
    return mk_scores([int(round(v * 10)) for v in floats])


class TestAllocate:
    def test_forced_assignment(self):
        types = [
            QuantType("q6_K", 6, 6.6, 1),
            QuantType("q4_K", 4, 4.5, 2),
        ]
        scores = scaled_scores([0.9, 0.1, 0.5])
        alloc = allocate(scores, Composition((1, 2)), types)
        assert alloc.assignment == {0: "q6_K", 2: "q4_K", 1: "q4_K"}

    def test_everything_least_aggressive(self):
        reg = kquants_registry()
        scores = mk_scores([3, 1, 4, 1, 5])
        alloc = allocate(scores, Composition((5, 0, 0, 0, 0)), reg.types)
        assert set(alloc.assignment.values()) == {"q8_0"}

    def test_all_ties_assign_by_layer_id(self):
        types = [QuantType("a", 4, 4.4, 1), QuantType("b", 2, 2.2, 2)]
        scores = mk_scores([7, 7, 7])
        alloc = allocate(scores, Composition((2, 1)), types)
        assert alloc.assignment == {0: "a", 1: "a", 2: "b"}

    def test_counts_match_composition(self, rng):
        reg = make_registry(4, 2)
        for _ in range(100):
            L = int(rng.integers(4, 40))
            splits = sorted(rng.integers(0, L + 1, size=3))
            z = tuple(int(v) for v in [splits[0], splits[1] - splits[0], splits[2] - splits[1], L - splits[2]])
            scores = mk_scores(list(rng.integers(-50, 50, size=L)))
            alloc = allocate(scores, Composition(z), reg.types)
            assert alloc.type_counts(reg.types) == z

    def test_monotone_precision_in_score(self, rng):
        reg = make_registry(3, 2)
        bits = {t.name: t.effective_bits for t in reg.types}
        for _ in range(50):
            L = 12
            z = (4, 3, 5)
            scores = mk_scores(list(rng.integers(-9, 9, size=L)))
            alloc = allocate(scores, Composition(z), reg.types)
            for a in scores:
                for b in scores:
                    if a.score > b.score:
                        assert bits[alloc.assignment[a.layer_id]] >= bits[alloc.assignment[b.layer_id]]

    def test_length_mismatch(self):
        reg = make_registry(2, 2)
        with pytest.raises(ValidationError):
            allocate(mk_scores([1, 2]), Composition((2, 1)), reg.types)

    def test_rejects_non_monotone_type_order(self):
        types = [QuantType("low", 2, 2.2, 1), QuantType("high", 6, 6.6, 2)]
        with pytest.raises(ValidationError, match="aggressive"):
            allocate(mk_scores([1, 2]), Composition((1, 1)), types)

    def test_permutation_equivariance(self, rng):
        reg = make_registry(2, 2)
        values = [9, -3, 4, 0, 7, 2]
        scores = mk_scores(values)
        alloc = allocate(scores, Composition((2, 4)), reg.types)
        # relabel layers by reversing ids; distinct scores keep the mapping
        perm = list(range(len(values)))[::-1]
        relabeled = mk_scores([values[perm[i]] for i in range(len(values))])
        alloc2 = allocate(relabeled, Composition((2, 4)), reg.types)
        for new_id, old_id in enumerate(perm):
            assert alloc2.assignment[new_id] == alloc.assignment[old_id]


class TestAverageBits:
    def test_uniform_q3(self):
        reg = kquants_registry()
        scores = mk_scores([0, 0, 0, 0])
        alloc = allocate(scores, Composition((0, 0, 0, 0, 4)), reg.types)
        assert average_effective_bits(alloc, reg) == pytest.approx(3.44, abs=1e-12)

    def test_half_q3_half_q8(self):
        reg = kquants_registry()
        scores = mk_scores(list(range(8)))
        alloc = allocate(scores, Composition((4, 0, 0, 0, 4)), reg.types)
        assert average_effective_bits(alloc, reg) == pytest.approx(5.97, abs=1e-12)

    def test_qwen_style_split_percentages(self):
        # 72-layer model split 52/20 across the two most aggressive types
        assert type_share_percent(52, 72) == 72.2
        assert type_share_percent(20, 72) == 27.8


class TestManifest:
    def test_block_kind_mapping(self):
        assert sublayer_of(0) == (0, "attention")
        assert sublayer_of(1) == (0, "ffn")
        assert sublayer_of(7) == (3, "ffn")
        assert default_tensor_pattern(0, "attention") == "blk.0.attn_*"

    def test_manifest_round_trip(self, tmp_path, rng):
        reg = kquants_registry()
        L = 64
        z = (8, 12, 4, 20, 20)
        scores = mk_scores(list(rng.integers(-99, 99, size=L)))
        alloc = allocate(scores, Composition(z), reg.types, weights=WeightVector((0.7, 0.3)))
        path = tmp_path / "manifest.json"
        emitted = emit_manifest(alloc, reg, model_name="toy", path=path)
        parsed = parse_manifest(path)
        assert parsed == emitted
        assert len(parsed["layers"]) == L
        assert manifest_type_counts(parsed, reg.types) == z
        assert parsed["composition"] == list(z)
        assert {p["tensor_pattern"] for p in parsed["passthrough"]} == {"token_embd.*", "output.*"}
        assert parsed["passthrough"][0]["quant"] == "q8_0"  # least aggressive default

    def test_byte_stable(self, tmp_path, rng):
        reg = kquants_registry()
        scores = mk_scores(list(rng.integers(-9, 9, size=10)))
        alloc = allocate(scores, Composition((2, 2, 2, 2, 2)), reg.types)
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        emit_manifest(alloc, reg, model_name="toy", path=p1)
        emit_manifest(alloc, reg, model_name="toy", path=p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_unknown_passthrough_type_rejected(self):
        reg = kquants_registry()
        alloc = allocate(mk_scores([1, 2]), Composition((1, 1, 0, 0, 0)), reg.types)
        with pytest.raises(ValidationError):
            build_manifest(alloc, reg, "toy", passthrough_quant="q1_X")

    def test_manifest_missing_field(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"model": "x"}))
        with pytest.raises(ValidationError, match="missing"):
            parse_manifest(path)
