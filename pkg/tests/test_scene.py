import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resonet.resonator import FactorizationProblem, ResonatorConfig, solve
from resonet.scene import (
    COLORS,
    DIGITS,
    EXAMPLE_SCENE,
    HORIZONTAL,
    SWEEP_COLUMNS,
    VERTICAL,
    SceneCodebooks,
    SceneDescription,
    SceneObject,
    accuracy_sweep,
    corrupt_to_similarity,
    encode_object,
    encode_scene,
    noisy_scene,
    parse_scene,
    random_scene,
    scene_correct,
    sweep_to_csv,
)
from resonet.vsa import Hypervector, SumVector, cosine, derive_seed, random_hypervector


@pytest.fixture(scope="module")
def cbs():
    return SceneCodebooks.build(500, 0)


class TestDescriptions:
    def test_label_sets(self):
        assert len(COLORS) == 7 and len(DIGITS) == 10
        assert len(VERTICAL) == 3 and len(HORIZONTAL) == 3

    def test_scene_space_size(self):
        singles = len(COLORS) * len(DIGITS) * len(VERTICAL) * len(HORIZONTAL)
        assert singles == 630
        assert singles + singles**2 + singles**3 == 250_444_530

    def test_validation(self):
        with pytest.raises(ValueError):
            SceneObject.make("purple", 1, "top", "left")
        with pytest.raises(ValueError):
            SceneDescription(())
        obj = ("red", 1, "top", "left")
        with pytest.raises(ValueError):
            SceneDescription((obj, obj))
        with pytest.raises(ValueError):
            SceneDescription((obj, ("red", 2, "top", "left"), ("red", 3, "top", "left"), ("red", 4, "top", "left")))

    def test_json(self):
        obj = EXAMPLE_SCENE.to_json()
        assert obj["objects"][0] == {"color": "cyan", "digit": 7, "v": "top", "h": "left"}
        assert SceneDescription.from_json(obj) == EXAMPLE_SCENE
        with pytest.raises(ValueError):
            SceneDescription.from_json({"objects": [{"color": "red"}]})

    def test_random_scene(self):
        a = random_scene(3, 11)
        assert a == random_scene(3, 11)
        assert len(a.objects) == 3 and len(set(a.objects)) == 3
        with pytest.raises(ValueError):
            random_scene(4, 0)

    def test_random_single_roughly_uniform(self):
        colors = [random_scene(1, s).objects[0].color for s in range(1400)]
        counts = [colors.count(c) for c in COLORS]
        assert min(counts) > 140 and max(counts) < 260


class TestEncoding:
    def test_example_scene(self, cbs):
        s = encode_scene(EXAMPLE_SCENE, cbs)
        assert s.term_count == 3 and s.dim == 500

    def test_single_object_is_product(self, cbs):
        obj = SceneObject.make("red", 8, "middle", "left")
        s = encode_scene(SceneDescription((obj,)), cbs)
        np.testing.assert_array_equal(s.elements, encode_object(obj, cbs).elements)

    @settings(max_examples=20)
    @given(st.integers(0, 2**32), st.permutations(range(3)))
    def test_order_invariant(self, seed, order):
        cbs = SceneCodebooks.build(128, 1)
        desc = random_scene(3, seed)
        shuffled = SceneDescription(tuple(desc.objects[i] for i in order))
        assert encode_scene(desc, cbs) == encode_scene(shuffled, cbs)

    def test_deflation_exact(self, cbs):
        desc = random_scene(3, 5)
        s = encode_scene(desc, cbs)
        rest = s.elements - encode_object(desc.objects[0], cbs).elements
        np.testing.assert_array_equal(rest, encode_scene(SceneDescription(desc.objects[1:]), cbs).elements)


class TestCorruption:
    def test_ninety_percent(self):
        v = random_hypervector(500, 1)
        w = corrupt_to_similarity(v, 0.9, 2)
        assert int(np.sum(v.elements != w.elements)) == 25
        assert cosine(v, w) == pytest.approx(0.9, abs=1e-12)

    def test_identity_at_one(self):
        v = random_hypervector(500, 1)
        assert corrupt_to_similarity(v, 1.0, 2) == v

    @given(st.integers(1, 600), st.floats(0.01, 1.0), st.integers(0, 2**32))
    def test_within_one_over_n(self, n, target, seed):
        v = random_hypervector(n, seed)
        w = corrupt_to_similarity(v, target, seed + 1)
        assert isinstance(w, Hypervector) and w.dim == n
        assert abs(cosine(v, w) - target) <= 1.0 / n + 1e-12
        assert w == corrupt_to_similarity(v, target, seed + 1)

    def test_bad_target(self):
        v = random_hypervector(10, 1)
        for t in (0.0, -0.5, 1.5):
            with pytest.raises(ValueError):
                corrupt_to_similarity(v, t, 0)

    def test_noisy_scene(self, cbs):
        ns = noisy_scene(EXAMPLE_SCENE, cbs, 0.8, 3)
        assert abs(ns.achieved_similarity - 0.8) <= 1 / 500
        assert ns.ground_truth == EXAMPLE_SCENE


class TestParse:
    def test_example_scene(self, cbs):
        parsed = parse_scene(encode_scene(EXAMPLE_SCENE, cbs), cbs)
        assert scene_correct(parsed, EXAMPLE_SCENE)
        assert len(parsed) == 3

    def test_single_object_stops(self, cbs):
        desc = random_scene(1, 9)
        parsed = parse_scene(encode_scene(desc, cbs), cbs, max_objects=3)
        assert len(parsed) == 1
        assert parsed[0].object == desc.objects[0]
        assert parsed[0].agreement == 1.0

    def test_all_single_objects(self, cbs):
        cfg = ResonatorConfig(record_trajectory=False)
        import itertools

        for obj in itertools.product(COLORS, DIGITS, VERTICAL, HORIZONTAL):
            obj = SceneObject(*obj)
            result, _ = solve(FactorizationProblem(encode_object(obj, cbs), cbs.all), cfg)
            assert result.labels == tuple(obj)

    def test_exact_multi_object_rate(self, cbs):
        # frozen calibration (500 scenes per count): 1.0 for both 2 and 3 objects
        for count in (2, 3):
            hits = 0
            for t in range(60):
                desc = random_scene(count, derive_seed("parse", count, t))
                hits += scene_correct(parse_scene(encode_scene(desc, cbs), cbs, 3), desc)
            assert hits / 60 >= 0.98

    def test_noisy_between_extremes(self, cbs):
        rates = {}
        for sim in (0.6, 0.8, 1.0):
            hits = 0
            for t in range(60):
                desc = random_scene(2, derive_seed("mid", t))
                ns = noisy_scene(desc, cbs, sim, derive_seed("mid-noise", t))
                hits += scene_correct(parse_scene(ns.vector, cbs, 2, stop_below=None), desc)
            rates[sim] = hits / 60
        assert rates[0.6] <= rates[0.8] <= rates[1.0]

    def test_max_objects_caps(self, cbs):
        parsed = parse_scene(encode_scene(EXAMPLE_SCENE, cbs), cbs, max_objects=1)
        assert len(parsed) == 1
        with pytest.raises(ValueError):
            parse_scene(encode_scene(EXAMPLE_SCENE, cbs), cbs, max_objects=0)

    def test_exact_deflation_reaches_zero(self, cbs):
        # after a correct parse the running vector is exactly empty, so
        # the loop ends without a further solve
        parsed = parse_scene(encode_scene(EXAMPLE_SCENE, cbs), cbs, max_objects=3, stop_below=None)
        total = sum(encode_object(p.object, cbs).elements.astype(int) for p in parsed)
        np.testing.assert_array_equal(total, encode_scene(EXAMPLE_SCENE, cbs).elements)

    def test_scoring_is_set_based(self):
        from resonet.scene import ParsedObject

        desc = EXAMPLE_SCENE
        fake = [ParsedObject(o, None, 1.0) for o in reversed(desc.objects)]
        assert scene_correct(fake, desc)
        assert not scene_correct(fake[:2], desc)
        assert not scene_correct(fake + fake[:1], desc)


class TestSweep:
    def test_columns_and_shape(self):
        rows = accuracy_sweep((1, 2), (0.7, 1.0), trials=4, dim=256, seed=1)
        assert len(rows) == 4
        text = sweep_to_csv(rows)
        assert text.splitlines()[0] == ",".join(SWEEP_COLUMNS)
        assert all(0.0 <= r["accuracy"] <= 1.0 for r in rows)

    def test_jobs_do_not_change_rows(self):
        a = accuracy_sweep((1, 3), (0.6, 1.0), trials=4, dim=256, seed=2, jobs=1)
        b = accuracy_sweep((1, 3), (0.6, 1.0), trials=4, dim=256, seed=2, jobs=2)
        assert a == b

    def test_single_object_perfect_at_one(self):
        rows = accuracy_sweep((1,), (1.0,), trials=50, dim=500, seed=3)
        assert rows[0]["accuracy"] == 1.0

    def test_bad_grid(self):
        with pytest.raises(ValueError):
            accuracy_sweep((1,), (0.0,), trials=1)
