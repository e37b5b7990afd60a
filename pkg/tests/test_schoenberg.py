import numpy as np
import pytest

from sdrkit.kernels import gaussian, generalized_cauchy, matern, powered_exponential
from sdrkit.schoenberg import (
    CertifyConfig,
    KernelCandidate,
    candidate_from_radial,
    certify_membership,
    cosine_profile_kernel,
    nesting_check,
    polynomial_kernel,
    psd_sweep,
    radiality_probe,
    signed_identity_kernel,
)

RADIAL_KERNELS = [
    gaussian(1.0),
    matern(1.0, 1.5),
    matern(0.5, 0.5),
    generalized_cauchy(1.0, 2.0, 1.5),
    powered_exponential(1.0, 2.0),
    powered_exponential(0.7, 0.5),
]


class TestRadiality:
    def test_gaussian_is_radial(self):
        ok, witness = radiality_probe(candidate_from_radial(gaussian(1.0)), rng=np.random.default_rng(1))
        assert ok and witness is None

    def test_powered_exponential_is_radial(self):
        ok, _ = radiality_probe(candidate_from_radial(powered_exponential(1.0, 1.0)))
        assert ok

    def test_polynomial_witness_pairs(self):
        k = polynomial_kernel()
        # equal distance 1, different values
        assert k([0, 0], [1, 0]) == 1.0
        assert k([1, 0], [1, 1]) == 2.0

    def test_polynomial_is_not_radial(self):
        ok, witness = radiality_probe(polynomial_kernel(), dims=(2, 5))
        assert not ok
        a, b = witness.pair_a, witness.pair_b
        assert np.linalg.norm(a[0] - a[1]) == pytest.approx(np.linalg.norm(b[0] - b[1]))
        assert witness.value_a != witness.value_b
        assert "equal distance" in witness.describe()

    def test_requires_enough_pairs(self):
        with pytest.raises(ValueError):
            radiality_probe(polynomial_kernel(), pairs_per_dim=5)


class TestPsdSweep:
    def test_gaussian(self):
        ratios = psd_sweep(candidate_from_radial(gaussian(1.0)), dims=(1, 5, 50), n=40, draws=3)
        assert set(ratios) == {1, 5, 50}
        assert all(r >= -1e-8 for r in ratios.values())

    def test_signed_identity_is_indefinite(self):
        # 3x3 matrix with 1 on the diagonal and -1 elsewhere: eigenvalues {2, 2, -1}
        G = signed_identity_kernel().gram(np.random.default_rng(0).standard_normal((3, 2)))
        np.testing.assert_allclose(np.linalg.eigvalsh(G), [-1, 2, 2], atol=1e-12)
        ratios = psd_sweep(signed_identity_kernel(), dims=(2,), n=3, draws=1)
        assert ratios[2] == pytest.approx(-0.5)

    def test_cosine_profile_fails_somewhere(self):
        # seed recorded: default_rng(0)
        ratios = psd_sweep(cosine_profile_kernel(), dims=(1, 2, 5, 10, 50), n=40, draws=5,
                           rng=np.random.default_rng(0))
        assert min(ratios.values()) < -1e-6

    def test_generic_gram_matches_vectorized(self, rng):
        k = matern(1.0, 2.5)
        slow = KernelCandidate(evaluator=k)
        X = rng.standard_normal((8, 3))
        np.testing.assert_allclose(slow.gram(X), candidate_from_radial(k).gram(X), atol=1e-14)


class TestNesting:
    def test_gaussian(self):
        assert nesting_check(gaussian(1.0), 2, 10, n=20)

    def test_matern(self):
        assert nesting_check(matern(1.0, 1.5), 1, 5, n=15)

    def test_requires_radial_kernel(self):
        with pytest.raises(TypeError):
            nesting_check(polynomial_kernel(), 1, 2)


class TestCertify:
    def test_gaussian_member(self):
        rep = certify_membership(gaussian(1.0))
        assert rep.verdict == "Member"
        assert rep.radial and rep.profile_cm.passed

    def test_polynomial_not_radial(self):
        rep = certify_membership(polynomial_kernel())
        assert rep.verdict == "NotRadial"
        assert rep.witness is not None
        assert rep.profile_cm is None

    def test_powered_exponential_member(self):
        assert certify_membership(powered_exponential(1.0, 2.0)).verdict == "Member"

    def test_cosine_not_psd(self):
        assert certify_membership(cosine_profile_kernel()).verdict == "NotPSD"

    @pytest.mark.parametrize("k", RADIAL_KERNELS, ids=lambda k: k.name)
    def test_radial_families_are_members(self, k):
        assert certify_membership(k).verdict == "Member"

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_verdicts_stable_across_seeds(self, seed):
        cfg = CertifyConfig(seed=seed)
        assert certify_membership(gaussian(1.0), cfg).verdict == "Member"
        assert certify_membership(polynomial_kernel(), cfg).verdict == "NotRadial"
        assert certify_membership(powered_exponential(1.0, 2.0), cfg).verdict == "Member"

    def test_inconclusive_when_profile_blows_up(self):
        def ev(z, zt):
            d = float(np.sum((z - zt) ** 2))
            return float("inf") if d > 50 else np.exp(-d)

        k = KernelCandidate(evaluator=ev, name="broken", matrix=lambda X: np.exp(-np.sum((X[:, None] - X[None]) ** 2, -1)))
        cfg = CertifyConfig(dims=(1, 2), cm_grid=(1.0, 60.0))
        rep = certify_membership(k, cfg)
        assert rep.verdict == "Inconclusive"

    def test_report_formats(self):
        rep = certify_membership(polynomial_kernel())
        kv = dict(line.split("=", 1) for line in rep.to_kv().splitlines())
        assert kv["verdict"] == "NotRadial" and kv["radial"] == "false"
        assert "psd.p50" in kv
        text = rep.to_text()
        assert "verdict: NotRadial" in text and "witness" in text

    def test_member_invariant(self):
        for k in RADIAL_KERNELS + [polynomial_kernel(), cosine_profile_kernel()]:
            rep = certify_membership(k)
            if rep.verdict == "Member":
                assert rep.radial and rep.profile_cm.passed
                assert all(r >= -1e-8 for r in rep.psd_by_dimension.values())
