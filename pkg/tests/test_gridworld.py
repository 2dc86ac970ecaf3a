import csv
import json
import os

import numpy as np
import pytest

from divib.errors import InvalidProfile
from divib.gridworld import (
    DEFAULT_PROFILES,
    ExperimentConfig,
    GridSpec,
    build_problem,
    c4_group,
    d4_group,
    generate_base_channel,
    generate_base_conditional,
    perturb_iid,
    perturb_preserving,
    position_group,
    reflection,
    rotation,
    run_experiment,
)
from divib.families import HierarchicalModel, project_to_family
from divib.partitions import partition_from_channel_rows, partition_from_dib_relation, projection_channel
from divib.prob import joint_decompose
from divib.solver import geometric_betas
from divib.symmetry import (
    discover_equivariances,
    divergence_from_symmetric,
    is_channel_equivariance,
    orbits_partition,
)

SMALL = GridSpec(
    n=3,
    ring_profiles={
        (1, 1): (0.25, 0.25, 0.25, 0.25),
        (0, 1): (0.1, 0.2, 0.5, 0.2),
        (0, 0): (0.1, 0.4, 0.4, 0.1),
    },
)


def _rows(j):
    return joint_decompose(j)[2]


def test_geometry():
    n = 5
    r = rotation(n)
    # (0, 0) is the top-left corner; a quarter turn takes it to the top-right
    assert r.sigma(0) == 4
    assert r.tau.images == (1, 2, 3, 0)
    m = reflection(n)
    assert m.sigma(0) == 4 and m.tau.images == (0, 3, 2, 1)
    four = r.compose(r).compose(r).compose(r)
    assert four.is_identity()


def test_base_channel_is_d4_equivariant():
    ch = _rows(generate_base_channel())
    for g in d4_group().elements:
        assert is_channel_equivariance(ch, g, tol=0.0)
    assert len(orbits_partition(position_group(d4_group()))) == 6


def test_base_channel_cells():
    j = generate_base_channel()
    ch = _rows(j)
    distinct = {tuple(r) for r in ch.rows}
    assert len(partition_from_channel_rows(ch)) == len(distinct)
    assert len(distinct) == len(set(DEFAULT_PROFILES.values())) * 4 - 3  # center row is fixed by D4
    # the maximal partition has 5 cells on the support (+ the zero-mass cell)
    p = j.flatten()
    pi = partition_from_dib_relation(p, project_to_family(HierarchicalModel.ce(j.shape), p))
    assert len(pi) == 6
    kappa = projection_channel(pi)
    assert divergence_from_symmetric(kappa, p, d4_group()) == 0.0


def test_invalid_profiles():
    with pytest.raises(InvalidProfile):
        generate_base_conditional(GridSpec(ring_profiles={(2, 2): (0.5, 0.5, 0, 0)}))
    prof = dict(DEFAULT_PROFILES)
    prof[(1, 2)] = (0.2, 0.3, 0.4, 0.1)  # not mirror-symmetric on the axis
    with pytest.raises(InvalidProfile):
        generate_base_conditional(GridSpec(ring_profiles=prof))
    prof = dict(DEFAULT_PROFILES)
    del prof[(0, 1)]
    with pytest.raises(InvalidProfile):
        generate_base_conditional(GridSpec(ring_profiles=prof))


def test_perturb_preserving():
    base = generate_base_channel()
    assert perturb_preserving(base, c4_group(), 0.0, 1) is base
    j = perturb_preserving(base, c4_group(), 0.1, np.random.default_rng(0))
    ch = _rows(j)
    for g in c4_group().generators:
        assert is_channel_equivariance(ch, g, tol=1e-12)
    assert np.array_equal(ch.rows > 0, _rows(base).rows > 0)
    p = j.flatten()
    pi = partition_from_dib_relation(p, project_to_family(HierarchicalModel.ce(j.shape), p))
    assert divergence_from_symmetric(projection_channel(pi), p, d4_group()) > 0


def test_perturb_iid():
    base = generate_base_channel(SMALL)
    assert perturb_iid(base, 0.0, 3) is base
    j = perturb_iid(base, 0.01, np.random.default_rng(0))
    before, after = _rows(base).rows, _rows(j).rows
    tv = 0.5 * np.abs(before - after).sum(axis=1)
    assert np.all(tv <= 0.01)
    assert discover_equivariances(_rows(base)).order() >= 8
    assert discover_equivariances(_rows(j)).order() == 1


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(eps1=0.01, eps2=0.1)
    with pytest.raises(ValueError):
        ExperimentConfig(eps1=-1.0)


def test_build_problem_is_seeded():
    a = build_problem(ExperimentConfig(seed=3))[2]
    b = build_problem(ExperimentConfig(seed=3))[2]
    c = build_problem(ExperimentConfig(seed=4))[2]
    assert np.array_equal(a.p.p, b.p.p)
    assert not np.array_equal(a.p.p, c.p.p)
    assert a.t_size == a.support.size + 1


def test_short_experiment_bundle(tmp_path):
    betas = tuple(geometric_betas(1e8, 1e-2, 40))
    out = tmp_path / "run"
    res = run_experiment(ExperimentConfig(betas=betas, output_dir=str(out)))
    files = sorted(os.listdir(out))
    assert files == ["info_curve.svg", "residuals.svg", "summary.json", "trace.csv"]
    with open(out / "trace.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["beta", "I_nats", "D_nats", "lagrangian", "eff_card", "converged", "div_C4", "div_D4"]
    assert len(rows) == 41
    summary = json.loads((out / "summary.json").read_text())
    assert set(summary["beta_thresholds"]) == {"C4", "D4"}
    assert summary["units"] == "nats"
    assert summary["n_points"] == 40
    assert summary == json.loads(json.dumps(res.summary))
    svg = (out / "info_curve.svg").read_text()
    assert "<svg" in svg and "href=\"http" not in svg
    out2 = tmp_path / "again"
    run_experiment(ExperimentConfig(betas=betas, output_dir=str(out2)))
    for f in files:
        assert (out / f).read_bytes() == (out2 / f).read_bytes()


def test_unperturbed_short_sweep_is_symmetric():
    betas = tuple(geometric_betas(1e8, 1e-2, 40))
    res = run_experiment(ExperimentConfig(eps1=0.0, eps2=0.0, betas=betas))
    assert res.trace.column("C4").max() <= 1e-10
    assert res.trace.column("D4").max() <= 1e-10
    assert res.summary["beta_thresholds"] == {"C4": betas[0], "D4": betas[0]}
