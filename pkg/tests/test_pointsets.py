import numpy as np
import pytest
from scipy import stats
from scipy.stats import qmc

from rqmckde.errors import InvalidArgument, UnsupportedDimension
from rqmckde.pointsets import (
    SamplerKind,
    SamplerSpec,
    derive_seed,
    generate,
    max_sobol_dimension,
    randomize_lms,
    randomize_nus,
    sample_mc,
    sample_stratified,
    sobol_net,
    write_csv,
)


def radical_inverse(i, base=2):
    """Independent van der Corput oracle."""
    x, f = 0.0, 1.0 / base
    while i:
        x += (i % base) * f
        i //= base
        f /= base
    return x


def one_per_dyadic_interval(points, m):
    """Every column has exactly one point in each [k 2^-m, (k+1) 2^-m)."""
    cells = np.floor(points * 2**m).astype(np.int64)
    return all(np.array_equal(np.sort(cells[:, j]), np.arange(2**m)) for j in range(points.shape[1]))


# ---- Monte Carlo ---------------------------------------------------------------


def test_mc_single_point_in_unit_interval():
    p = sample_mc(1, 1, seed=123).points
    assert p.shape == (1, 1)
    assert 0.0 <= p[0, 0] < 1.0


def test_mc_deterministic():
    a = sample_mc(3, 2**14, seed=7).points
    b = sample_mc(3, 2**14, seed=7).points
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample_mc(3, 2**14, seed=8).points)


def test_mc_mean_clt_bound():
    n = 2**16
    p = sample_mc(2, n, seed=1).points
    assert np.all(np.abs(p.mean(axis=0) - 0.5) < 4 / np.sqrt(12 * n))


@pytest.mark.parametrize("s,n", [(0, 4), (2, 0)])
def test_mc_rejects_bad_args(s, n):
    with pytest.raises(InvalidArgument):
        sample_mc(s, n, seed=0)


# ---- stratified ----------------------------------------------------------------


def test_stratified_quadrants():
    ps = sample_stratified(2, 4, seed=3)
    assert ps.q == 2 and ps.n == 4
    cells = {tuple(c) for c in np.floor(ps.points * 2).astype(int)}
    assert cells == {(0, 0), (0, 1), (1, 0), (1, 1)}


def test_stratified_one_dim_thirds_in_order():
    p = sample_stratified(1, 3, seed=5).points[:, 0]
    for i in range(3):
        assert i / 3 <= p[i] < (i + 1) / 3


def test_stratified_actual_n_recorded():
    ps = sample_stratified(3, 2**14, seed=1)
    assert ps.q == 25 and ps.n == 15625


def test_stratified_rejects_small_target():
    with pytest.raises(InvalidArgument):
        sample_stratified(3, 7, seed=0)


@pytest.mark.parametrize("s,target", [(1, 1000), (2, 2**14), (3, 2**15), (4, 10**4)])
def test_stratified_exhaustive_occupancy(s, target):
    ps = sample_stratified(s, target, seed=11)
    q = ps.q
    cells = np.floor(ps.points * q).astype(np.int64)
    flat = np.ravel_multi_index(cells.T, (q,) * s)
    # row i sits in cell i (lexicographic order) and every cell is hit once
    assert np.array_equal(flat, np.arange(q**s))


# ---- Sobol' nets ---------------------------------------------------------------


def test_sobol_1d_two_points():
    assert np.array_equal(sobol_net(1, 1).points[:, 0], [0.0, 0.5])


def test_sobol_1d_is_van_der_corput():
    got = sobol_net(1, 3).points[:, 0]
    assert np.array_equal(got, [radical_inverse(i) for i in range(8)])
    assert np.array_equal(got, [0, 1 / 2, 1 / 4, 3 / 4, 1 / 8, 5 / 8, 3 / 8, 7 / 8])


def test_sobol_first_coordinate_and_origin():
    net = sobol_net(7, 6).points
    assert np.all(net[0] == 0.0)
    assert np.array_equal(net[:, 0], [radical_inverse(i) for i in range(64)])


def test_sobol_net_property_s5_m10():
    assert one_per_dyadic_interval(sobol_net(5, 10).points, 10)


@pytest.mark.parametrize("s", [2, 13, 100, 1024])
def test_sobol_matches_reference_point_set(s):
    ours = sobol_net(s, 8).points
    ref = qmc.Sobol(s, scramble=False, bits=31).random_base2(8)
    key = lambda a: a[np.lexsort(a.T[::-1])]
    assert np.array_equal(key(ours), key(ref))


def test_sobol_dimension_limit():
    assert max_sobol_dimension() >= 100
    with pytest.raises(UnsupportedDimension):
        sobol_net(max_sobol_dimension() + 1, 4)
    with pytest.raises(UnsupportedDimension):
        SamplerSpec("nus", max_sobol_dimension() + 1)


# ---- randomizations ------------------------------------------------------------


@pytest.mark.parametrize("randomize", [randomize_lms, randomize_nus])
def test_randomized_point_zero_is_uniform(randomize):
    net = sobol_net(2, 2)
    u = np.array([randomize(net, seed).points[0] for seed in range(10_000)])
    crit = 1.95 / np.sqrt(u.shape[0])  # KS critical value at level 0.001
    for j in range(2):
        assert stats.kstest(u[:, j], "uniform").statistic < crit


@pytest.mark.parametrize("randomize", [randomize_lms, randomize_nus])
@pytest.mark.parametrize("s,m", [(2, 8), (8, 16), (3, 1)])
def test_randomized_keeps_dyadic_equidistribution(randomize, s, m):
    pts = randomize(sobol_net(s, m), seed=2024).points
    assert np.all((pts >= 0) & (pts < 1))
    assert one_per_dyadic_interval(pts, m)


@pytest.mark.parametrize("randomize", [randomize_lms, randomize_nus])
def test_randomized_two_dim_elementary_intervals(randomize):
    # the first two Sobol' coordinates form a (0, m, 2)-net; scrambling must keep that
    m = 8
    pts = randomize(sobol_net(2, m), seed=99).points
    for k in range(m + 1):
        cx = np.floor(pts[:, 0] * 2**k).astype(int)
        cy = np.floor(pts[:, 1] * 2 ** (m - k)).astype(int)
        counts = np.bincount(cx * 2 ** (m - k) + cy, minlength=2**m)
        assert np.all(counts == 1)


@pytest.mark.parametrize("randomize", [randomize_lms, randomize_nus])
def test_randomized_determinism(randomize):
    net = sobol_net(4, 10)
    a = randomize(net, 5).points
    assert np.array_equal(a, randomize(net, 5).points)
    assert not np.array_equal(a, randomize(net, 6).points)


def test_nus_beats_mc_variance_for_linear_integrand():
    n = 2**8
    net = sobol_net(1, 8)
    means = [randomize_nus(net, seed).points[:, 0].mean() for seed in range(200)]
    assert np.var(means, ddof=1) <= 1.0 / (12 * n)


def test_nus_scrambles_beyond_shift():
    # a digital shift keeps pairwise XOR distances; nested scrambling does not
    net = sobol_net(1, 4)
    pts = (randomize_nus(net, 3).points[:, 0] * 2**31).astype(np.int64)
    base = net.ints[:, 0].astype(np.int64)
    xor_shift = pts ^ base
    assert len(set(xor_shift >> 20)) > 1


# ---- dispatch and plumbing -----------------------------------------------------


def test_generate_dispatch_and_spec():
    for kind in SamplerKind:
        ps = generate(SamplerSpec(kind, 2, seed=4), 2**6)
        assert ps.spec.kind is kind and ps.s == 2
        assert not ps.points.flags.writeable
    with pytest.raises(InvalidArgument):
        generate(SamplerSpec("lms", 2, seed=4), 100)


def test_sampler_kind_parse():
    assert SamplerKind.parse("Sobol+NUS") is SamplerKind.SOBOL_NUS
    with pytest.raises(InvalidArgument, match="unknown sampler"):
        SamplerKind.parse("halton")


def test_derive_seed_independent_of_request_order():
    a = [derive_seed(9, i, 3) for i in range(5)]
    b = [derive_seed(9, i, 3) for i in reversed(range(5))][::-1]
    assert a == b
    assert len(set(a)) == 5


def test_csv_dump_roundtrip(tmp_path):
    ps = generate(SamplerSpec("nus", 3, seed=1), 2**5)
    path = tmp_path / "pts.csv"
    write_csv(ps, path)
    back = np.loadtxt(path, delimiter=",", skiprows=1)
    assert np.array_equal(back, ps.points)
