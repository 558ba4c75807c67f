import numpy as np
import pytest

import promptmotion as pm

MASK64 = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h = ((h ^ b) * 0x100000001B3) & MASK64
    return h


def splitmix64(state: int):
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def token_vector(token: str, dimension: int, seed: int) -> np.ndarray:
    state = seed ^ fnv1a64(token.encode())
    out = np.empty(dimension)
    for i in range(dimension):
        state, bits = splitmix64(state)
        out[i] = 2.0 * (bits >> 11) * 2.0**-53 - 1.0
    return out / np.linalg.norm(out)


def test_prompt_template():
    assert (
        pm.build_prompt("walk forward")
        == "Describe a person's body movements who is performing the action walk forward in detail"
    )
    with pytest.raises(pm.PromptMotionError) as info:
        pm.build_prompt("   ")
    assert info.value.code == "EmptyPhrase"


def test_stub_descriptions_are_deterministic():
    a = pm.stub_descriptions("jump in place", k=3, seed=1)
    assert len(a) == 3
    assert a == pm.stub_descriptions("jump in place", k=3, seed=1)


def test_hash_embedder_matches_python_oracle():
    values, mask = pm.embed_texts(["Lift the arm"], kind="token-matrix", dimension=6, seed=9)
    expected = np.stack([token_vector(t, 6, 9) for t in ["lift", "the", "arm"]])
    np.testing.assert_allclose(values, expected, atol=1e-15)
    assert mask.all()

    vec, _ = pm.embed_texts(["lift the arm", "arm"], kind="vector", dimension=6, seed=9)
    oracle = 0.5 * (expected.mean(axis=0) + token_vector("arm", 6, 9))
    np.testing.assert_allclose(vec.ravel(), oracle, atol=1e-12)


def test_aggregation_hand_case():
    out, mask = pm.aggregate_token_matrices([np.ones((2, 2)), np.array([[3.0, 3.0], [3.0, 3.0], [4.0, 4.0]])])
    np.testing.assert_array_equal(out, np.full((3, 2), 2.0))
    assert list(mask) == [True, True, True]
    np.testing.assert_allclose(pm.aggregate_vectors([np.array([1.0, 0.0]), np.array([0.0, 1.0])]), [0.5, 0.5])


def test_rotation_round_trip():
    rng = np.random.default_rng(0)
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    np.testing.assert_allclose(pm.sixd_to_rotmat(pm.rotmat_to_sixd(q)), q, atol=1e-12)


def test_fk_and_metrics():
    rot = np.tile(np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0]), (4, 22, 1))
    root = np.zeros((4, 3))
    g, local, traj = pm.forward_kinematics(rot, root)
    assert g.shape == (4, 22, 3) and local.shape == (4, 22, 3) and traj.shape == (4, 2)
    np.testing.assert_allclose(local[:, 0], 0.0)
    shifted = g + np.array([0.3, 0.4, 0.0])
    assert pm.ape([shifted], [g], "mean global") == pytest.approx(0.5, abs=1e-12)
    assert pm.ape([shifted], [g], "mean local") == pytest.approx(0.0, abs=1e-12)
    assert pm.ave([shifted], [g], "mean global") == pytest.approx(0.0, abs=1e-12)


def test_train_generate_evaluate(tmp_path):
    data = tmp_path / "data.json"
    ckpt = tmp_path / "ckpt.json"
    pm.make_synthetic_dataset(data, seed=0, count=12)
    config = pm.default_config("vae")
    config["cache_root"] = str(tmp_path / "cache")
    config["k"] = 2
    config["model"].update({"d": 8, "width": 16, "layers": 1, "ff_width": 32})
    config["training"]["steps"] = 3
    losses = pm.train(data, ckpt, config)
    assert len(losses) == 3 and all(np.isfinite(losses))

    a = pm.generate(ckpt, ["raise the left arm", "sit down"], 6, seed=2)
    b = pm.generate(ckpt, ["raise the left arm", "sit down"], 6, seed=2)
    assert a["rotations"].shape == (12, 22, 6)
    np.testing.assert_array_equal(a["rotations"], b["rotations"])

    report = pm.evaluate(ckpt, data)
    assert report["sample_count"] == 2
    assert set(report["Average Positional Error"]) == {"root joint", "global traj", "mean local", "mean global"}
