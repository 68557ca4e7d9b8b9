import json
import math

import numpy as np
import pytest

import otflow


@pytest.fixture
def circle():
    return otflow.Space.circle(32)


def cosine(space, amplitude=0.5):
    return otflow.preset_density("cosine_mode", {"k": 1, "amplitude": amplitude}, space)


def test_space_generators(circle):
    assert circle.n == 32
    assert circle.mesh == pytest.approx(1 / 32)
    assert circle.diameter == pytest.approx(0.5)
    d = np.asarray(circle.dist)
    assert np.allclose(d, d.T)
    box = otflow.Space.box(5, "linf")
    assert box.n == 25
    assert sum(box.measure) == pytest.approx(1.0)


def test_space_roundtrip(tmp_path, circle):
    p = tmp_path / "s.txt"
    circle.save(p)
    back = otflow.Space.load(p)
    assert back.id == circle.id


def test_invalid_space_raises():
    with pytest.raises(otflow.OtflowError):
        otflow.Space.from_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]), [0.7, 0.7])


def test_w2_two_points():
    s = otflow.Space.from_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]), [0.5, 0.5])
    cost, gamma = otflow.w2(s, [2.0, 0.0], [0.0, 2.0])
    assert cost == pytest.approx(1.0)
    assert np.asarray(gamma)[0, 1] == pytest.approx(1.0)


def test_w2_self_and_entropic(circle):
    mu = cosine(circle)
    nu = otflow.preset_density("bump", {"center": 0.3}, circle)
    assert otflow.w2(circle, mu, mu)[0] == pytest.approx(0.0, abs=1e-14)
    exact = otflow.w2(circle, mu, nu)[0]
    approx = otflow.w2(circle, mu, nu, entropic_eps=1e-3)[0]
    assert exact > 0
    assert approx == pytest.approx(exact, rel=0.2, abs=1e-2)


def test_c_transform_involution(circle):
    rng = np.random.default_rng(4)
    psi = list(rng.normal(size=circle.n))
    once = otflow.c_transform(circle, psi)
    thrice = otflow.c_transform(circle, otflow.c_transform(circle, once))
    assert np.max(np.abs(np.subtract(thrice, once))) < 1e-12


def test_hopf_lax_constant(circle):
    q, dplus, dminus = otflow.hopf_lax(circle, [3.0] * circle.n, 0.1)
    assert np.allclose(q, 3.0)
    report = otflow.hj_residuals(circle, cosine(circle), 0.05)
    assert report["name"]
    assert "pass" in report


def test_energies(circle):
    f = [math.cos(2 * math.pi * i / circle.n) for i in range(circle.n)]
    quad = otflow.cheeger_energy(circle, f, backend="quadratic")
    assert quad == pytest.approx(math.pi**2, rel=0.01)
    assert otflow.cheeger_energy(circle, [1.0] * circle.n) == 0.0
    with pytest.raises(otflow.OtflowError):
        otflow.cheeger_energy(circle, f, backend="cubic")


def test_heat_flow_conserves_mass(circle):
    mu = cosine(circle)
    traj = otflow.heat_flow(circle, mu, "quadratic", 5e-2, 2)
    fields = traj["fields"]
    assert fields.shape == (3, circle.n)
    m = np.asarray(circle.measure)
    assert np.allclose(fields @ m, 1.0)
    report = otflow.kuwada_check(circle, fields, traj["times"], traj["tau"])
    assert report["pass"]


def test_jko_flow_entropy_decreases(circle):
    mu = cosine(circle)
    traj = otflow.jko_flow(circle, mu, 1e-2, 3)
    ent = [otflow.entropy(circle, list(f)) for f in traj["fields"]]
    assert all(b <= a + 1e-12 for a, b in zip(ent, ent[1:]))


def test_reports(circle):
    mu = cosine(circle)
    nu = otflow.preset_density("constant", {}, circle)
    assert otflow.brenier_check(circle, mu, mu)["pass"]
    conv = otflow.displacement_convexity_check(circle, mu, nu, K=0.0)
    assert conv["pass"]
    assert otflow.ede_nonuniqueness_demo()["pass"]


def test_pipeline(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "space.kind = circle\nspace.n = 32\nfield.kind = cosine_mode\nfield.amplitude = 0.5\n"
        "flow.kind = heat\nflow.tau = 5e-2\nflow.steps = 2\ndiag.list = kuwada\nrun.out = out\n"
    )
    code, manifest, passes = otflow.run_pipeline(cfg)
    assert code == 0
    assert passes == {"kuwada": True}
    assert "artifacts" in json.loads(open(manifest).read())
    with pytest.raises(otflow.OtflowError):
        otflow.run_pipeline(tmp_path / "absent.cfg")
