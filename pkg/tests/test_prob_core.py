"""Test the dmlm.prob_core module."""

# =============================================================================
# IMPORTS
# =============================================================================

# Standard Library
import math

# Third Party
import numpy as np
import pytest
import torch

# dmlm
import dmlm.errors
import dmlm.prob_core

# =============================================================================
# FIXTURES
# =============================================================================


@pytest.fixture
def make_gaussian():
    """Build a DiagGaussian from plain lists."""

    def _create(mu, log_var):
        return dmlm.prob_core.DiagGaussian(
            torch.tensor(mu, dtype=torch.float64),
            torch.tensor(log_var, dtype=torch.float64),
        )

    return _create


@pytest.fixture
def random_triples():
    """Three batches of 1000 random four dimensional Gaussians."""
    rng = np.random.default_rng(0)

    def _draw():
        return dmlm.prob_core.DiagGaussian(
            torch.from_numpy(rng.normal(0.0, 3.0, size=(1000, 4))),
            torch.from_numpy(rng.uniform(-5.0, 5.0, size=(1000, 4))),
        )

    return _draw(), _draw(), _draw()


def _dimension(dist, index):
    """Slice out a single dimension of a batched Gaussian."""
    return dmlm.prob_core.DiagGaussian(
        dist.mu[:, index : index + 1], dist.log_var[:, index : index + 1]
    )


# =============================================================================
# TESTS
# =============================================================================


class TestDiagGaussian:
    """Test dmlm.prob_core.DiagGaussian."""

    def test___post_init__(self):
        """Test construction from plain values."""
        inst = dmlm.prob_core.DiagGaussian([1.0, 2.0], [0.0, 0.0])

        assert inst.mu.dtype == torch.float64
        assert inst.dim == 2
        assert inst.batch_shape == torch.Size([])

    def test___post_init__scalar(self):
        """Test that scalars become 1-D distributions."""
        inst = dmlm.prob_core.DiagGaussian(1.0, 0.0)

        assert inst.dim == 1

    def test___post_init__clamps(self):
        """Test that the log-variance is clamped."""
        inst = dmlm.prob_core.DiagGaussian([0.0, 0.0], [-50.0, 50.0])

        assert inst.log_var.tolist() == [
            dmlm.prob_core.LOGVAR_MIN,
            dmlm.prob_core.LOGVAR_MAX,
        ]

    def test___post_init__shape_mismatch(self):
        """Test construction with mismatched shapes."""
        with pytest.raises(dmlm.errors.ContractViolationError, match="shapes differ"):
            dmlm.prob_core.DiagGaussian([0.0, 0.0], [0.0])

    def test___post_init__empty(self):
        """Test construction with zero dimensions."""
        with pytest.raises(dmlm.errors.ContractViolationError):
            dmlm.prob_core.DiagGaussian(torch.zeros(0), torch.zeros(0))

    # Properties

    def test_std_variance(self, make_gaussian):
        """Test DiagGaussian.std and DiagGaussian.variance."""
        inst = make_gaussian([0.0, 0.0], [0.0, math.log(4.0)])

        assert inst.std.tolist() == pytest.approx([1.0, 2.0])
        assert inst.variance.tolist() == pytest.approx([1.0, 4.0])

    def test_batch_shape(self):
        """Test DiagGaussian.batch_shape."""
        inst = dmlm.prob_core.DiagGaussian(torch.zeros(3, 2, 5), torch.zeros(3, 2, 5))

        assert inst.batch_shape == torch.Size([3, 2])
        assert inst.dim == 5

    # Methods

    def test_standard(self):
        """Test DiagGaussian.standard."""
        inst = dmlm.prob_core.DiagGaussian.standard(4)

        assert inst.mu.tolist() == [0.0] * 4
        assert inst.log_var.tolist() == [0.0] * 4

    def test_from_variance(self):
        """Test DiagGaussian.from_variance."""
        inst = dmlm.prob_core.DiagGaussian.from_variance([1.0], [math.e])

        assert inst.log_var.item() == pytest.approx(1.0)

    def test_from_variance__not_positive(self):
        """Test DiagGaussian.from_variance with a zero variance."""
        with pytest.raises(
            dmlm.errors.ContractViolationError, match="strictly positive"
        ):
            dmlm.prob_core.DiagGaussian.from_variance([1.0, 0.0], [1.0, 0.0])

    def test_detach(self):
        """Test DiagGaussian.detach."""
        mu = torch.zeros(2, dtype=torch.float64, requires_grad=True)

        inst = dmlm.prob_core.DiagGaussian(mu * 2, torch.zeros(2, dtype=torch.float64))

        assert inst.mu.requires_grad
        assert not inst.detach().mu.requires_grad

    @pytest.mark.parametrize(
        "mu, expected",
        (
            ([0.0, 1.0], True),
            ([0.0, float("nan")], False),
            ([float("inf"), 1.0], False),
        ),
    )
    def test_is_finite(self, mu, expected):
        """Test DiagGaussian.is_finite."""
        inst = dmlm.prob_core.DiagGaussian(mu, [0.0, 0.0])

        assert inst.is_finite() is expected


class TestGaussianSequence:
    """Test dmlm.prob_core.GaussianSequence."""

    def test___post_init__(self):
        """Test construction."""
        inst = dmlm.prob_core.GaussianSequence(torch.zeros(4, 3), torch.zeros(4, 3))

        assert len(inst) == 4
        assert inst.dim == 3

    @pytest.mark.parametrize(
        "shape",
        ((3,), (0, 3), (2, 0)),
    )
    def test___post_init__invalid(self, shape):
        """Test construction with invalid shapes."""
        with pytest.raises(dmlm.errors.ContractViolationError):
            dmlm.prob_core.GaussianSequence(torch.zeros(shape), torch.zeros(shape))

    def test___getitem__(self):
        """Test GaussianSequence.__getitem__."""
        mu = torch.arange(6, dtype=torch.float64).reshape(3, 2)

        inst = dmlm.prob_core.GaussianSequence(mu, torch.zeros(3, 2))

        assert inst[1].mu.tolist() == [2.0, 3.0]

    def test___getitem__batched(self):
        """Test GaussianSequence.__getitem__ on a batched sequence."""
        mu = torch.arange(12, dtype=torch.float64).reshape(2, 3, 2)

        inst = dmlm.prob_core.GaussianSequence(mu, torch.zeros(2, 3, 2))

        assert inst[0].batch_shape == torch.Size([2])
        assert inst[0].mu.tolist() == [[0.0, 1.0], [6.0, 7.0]]

    # Properties

    def test_items(self):
        """Test GaussianSequence.items."""
        inst = dmlm.prob_core.GaussianSequence(torch.zeros(3, 2), torch.zeros(3, 2))

        assert len(inst.items) == 3
        assert all(item.dim == 2 for item in inst.items)

    # Methods

    def test_from_items(self):
        """Test GaussianSequence.from_items."""
        items = [
            dmlm.prob_core.DiagGaussian([float(idx)], [0.0]) for idx in range(3)
        ]

        result = dmlm.prob_core.GaussianSequence.from_items(items)

        assert result.mu.tolist() == [[0.0], [1.0], [2.0]]

    def test_from_items__empty(self):
        """Test GaussianSequence.from_items with nothing."""
        with pytest.raises(dmlm.errors.ContractViolationError):
            dmlm.prob_core.GaussianSequence.from_items([])

    def test_from_items__dimension_mismatch(self):
        """Test GaussianSequence.from_items with different dimensions."""
        items = [
            dmlm.prob_core.DiagGaussian([0.0], [0.0]),
            dmlm.prob_core.DiagGaussian([0.0, 1.0], [0.0, 0.0]),
        ]

        with pytest.raises(dmlm.errors.ContractViolationError, match="same dimension"):
            dmlm.prob_core.GaussianSequence.from_items(items)

    def test_select(self):
        """Test GaussianSequence.select."""
        mu = torch.arange(4, dtype=torch.float64).reshape(4, 1)

        inst = dmlm.prob_core.GaussianSequence(mu, torch.zeros(4, 1))

        assert inst.select([3, 1]).mu.flatten().tolist() == [3.0, 1.0]


class Test_kl_diag:
    """Test dmlm.prob_core.kl_diag()."""

    @pytest.mark.parametrize(
        "p, q, expected",
        (
            (([1.0], [0.0]), ([0.0], [0.0]), 0.5),
            (([0.0], [math.log(4.0)]), ([0.0], [0.0]), 0.5 * (math.log(0.25) + 3.0)),
            (([0.0, 0.0], [0.0, 0.0]), ([1.0, -1.0], [0.0, 0.0]), 1.0),
        ),
    )
    def test_values(self, make_gaussian, p, q, expected):
        """Test hand computed divergences."""
        result = dmlm.prob_core.kl_diag(make_gaussian(*p), make_gaussian(*q))

        assert float(result) == pytest.approx(expected, abs=1e-12)

    def test_identical(self, make_gaussian):
        """Test that the divergence of a distribution to itself is zero."""
        p = make_gaussian([0.3, -1.2], [0.5, -0.7])

        assert float(dmlm.prob_core.kl_diag(p, p)) == pytest.approx(0.0, abs=1e-12)

    def test_asymmetric(self, make_gaussian):
        """Test that the divergence is not symmetric."""
        p = make_gaussian([0.0], [0.0])
        q = make_gaussian([0.0], [math.log(4.0)])

        assert float(dmlm.prob_core.kl_diag(p, q)) != pytest.approx(
            float(dmlm.prob_core.kl_diag(q, p))
        )

    def test_batched(self, make_gaussian):
        """Test that batch dimensions broadcast."""
        p = dmlm.prob_core.DiagGaussian(torch.zeros(3, 2), torch.zeros(3, 2))
        q = make_gaussian([1.0, 0.0], [0.0, 0.0])

        result = dmlm.prob_core.kl_diag(p, q)

        assert result.shape == (3,)
        assert result.tolist() == pytest.approx([0.5] * 3)

    def test_dimension_mismatch(self, make_gaussian):
        """Test comparing distributions of different dimensions."""
        with pytest.raises(
            dmlm.errors.ContractViolationError, match="Dimension mismatch"
        ):
            dmlm.prob_core.kl_diag(
                make_gaussian([0.0], [0.0]), make_gaussian([0.0, 0.0], [0.0, 0.0])
            )

    def test_non_finite(self, make_gaussian):
        """Test that non-finite inputs are rejected."""
        with pytest.raises(dmlm.errors.ContractViolationError, match="non-finite"):
            dmlm.prob_core.kl_diag(
                make_gaussian([float("nan")], [0.0]), make_gaussian([0.0], [0.0])
            )

    def test_extreme_log_var(self, make_gaussian):
        """Test that clamped extreme inputs stay finite."""
        p = make_gaussian([0.0], [40.0])
        q = make_gaussian([0.0], [-40.0])

        assert math.isfinite(float(dmlm.prob_core.kl_diag(p, q)))

    def test_non_negative(self, random_triples):
        """Test that the divergence of random pairs is never negative."""
        p, q, _ = random_triples

        assert (dmlm.prob_core.kl_diag(p, q) >= -1e-12).all()
        assert (dmlm.prob_core.kl_diag(q, p) >= -1e-12).all()
        assert dmlm.prob_core.kl_diag(p, p).abs().max() <= 1e-12

    def test_additive(self, random_triples):
        """Test that the divergence is the sum over dimensions."""
        p, q, _ = random_triples

        parts = sum(
            dmlm.prob_core.kl_diag(_dimension(p, index), _dimension(q, index))
            for index in range(4)
        )

        assert torch.allclose(
            dmlm.prob_core.kl_diag(p, q), parts, rtol=1e-10, atol=1e-10
        )


class Test_w2_diag:
    """Test dmlm.prob_core.w2_diag()."""

    @pytest.mark.parametrize(
        "p, q, expected",
        (
            (([0.0], [0.0]), ([3.0], [0.0]), 3.0),
            (([0.0], [0.0]), ([0.0], [math.log(4.0)]), 1.0),
            (([0.0, 0.0], [0.0, 0.0]), ([3.0, 4.0], [0.0, 0.0]), 5.0),
        ),
    )
    def test_values(self, make_gaussian, p, q, expected):
        """Test hand computed distances."""
        result = dmlm.prob_core.w2_diag(make_gaussian(*p), make_gaussian(*q))

        assert float(result) == pytest.approx(expected, abs=1e-12)

    def test_symmetric(self, make_gaussian):
        """Test that the distance is symmetric."""
        p = make_gaussian([0.2, 1.0], [0.1, -0.4])
        q = make_gaussian([-1.0, 0.5], [0.9, 0.3])

        assert float(dmlm.prob_core.w2_diag(p, q)) == pytest.approx(
            float(dmlm.prob_core.w2_diag(q, p))
        )

    def test_zero_distance_gradient(self):
        """Test that identical inputs have a finite zero gradient."""
        mu = torch.zeros(2, dtype=torch.float64, requires_grad=True)
        log_var = torch.zeros(2, dtype=torch.float64)

        p = dmlm.prob_core.DiagGaussian(mu, log_var)
        q = dmlm.prob_core.DiagGaussian(torch.zeros(2, dtype=torch.float64), log_var)

        dmlm.prob_core.w2_diag(p, q).backward()

        assert mu.grad.tolist() == [0.0, 0.0]

    def test_triangle_inequality(self, random_triples):
        """Test the triangle inequality over random triples."""
        p, q, r = random_triples

        direct = dmlm.prob_core.w2_diag(p, r)
        detour = dmlm.prob_core.w2_diag(p, q) + dmlm.prob_core.w2_diag(q, r)

        assert (direct <= detour + 1e-9).all()
        assert (dmlm.prob_core.w2_diag(p, q) >= 0).all()
        assert torch.equal(dmlm.prob_core.w2_diag(p, q), dmlm.prob_core.w2_diag(q, p))

    def test_additive(self, random_triples):
        """Test that squared distances add over dimensions."""
        p, q, _ = random_triples

        parts = sum(
            dmlm.prob_core.w2_diag(_dimension(p, index), _dimension(q, index)) ** 2
            for index in range(4)
        )

        assert torch.allclose(
            dmlm.prob_core.w2_diag(p, q) ** 2, parts, rtol=1e-10, atol=1e-10
        )


class Test_sample:
    """Test dmlm.prob_core.sample()."""

    def test(self, make_gaussian):
        """Test the reparameterized sample."""
        p = make_gaussian([1.0, -1.0], [0.0, math.log(4.0)])

        result = dmlm.prob_core.sample(p, [1.0, 1.0])

        assert result.tolist() == pytest.approx([2.0, 1.0])

    def test_gradients(self):
        """Test that gradients reach the parameters."""
        mu = torch.zeros(2, dtype=torch.float64, requires_grad=True)
        log_var = torch.zeros(2, dtype=torch.float64, requires_grad=True)

        result = dmlm.prob_core.sample(
            dmlm.prob_core.DiagGaussian(mu, log_var), [1.0, 2.0]
        )
        result.sum().backward()

        assert mu.grad.tolist() == [1.0, 1.0]
        assert log_var.grad.tolist() == pytest.approx([0.5, 1.0])

    def test_wrong_dimension(self, make_gaussian):
        """Test noise of the wrong dimension."""
        with pytest.raises(
            dmlm.errors.ContractViolationError, match="last dimension 2"
        ):
            dmlm.prob_core.sample(
                make_gaussian([0.0, 0.0], [0.0, 0.0]), [1.0, 2.0, 3.0]
            )


class Test_pool_sequence:
    """Test dmlm.prob_core.pool_sequence()."""

    def test(self):
        """Test mixture moment matching."""
        seq = dmlm.prob_core.GaussianSequence(
            torch.tensor([[0.0], [2.0]], dtype=torch.float64),
            torch.zeros(2, 1, dtype=torch.float64),
        )

        result = dmlm.prob_core.pool_sequence(seq)

        assert result.mu.tolist() == pytest.approx([1.0])
        # mean variance 1 plus the spread of the means 1.
        assert result.variance.tolist() == pytest.approx([2.0])

    def test_valid_mask(self):
        """Test that masked out positions are ignored."""
        seq = dmlm.prob_core.GaussianSequence(
            torch.tensor([[[1.0], [100.0]]], dtype=torch.float64),
            torch.zeros(1, 2, 1, dtype=torch.float64),
        )

        result = dmlm.prob_core.pool_sequence(seq, torch.tensor([[True, False]]))

        assert result.batch_shape == torch.Size([1])
        assert result.mu.tolist() == pytest.approx([[1.0]])
        assert result.variance.tolist() == pytest.approx([[1.0]])

    def test_variance_floor(self):
        """Test that the pooled variance never drops below the floor."""
        seq = dmlm.prob_core.GaussianSequence(
            torch.zeros(3, 1, dtype=torch.float64),
            torch.full((3, 1), -10.0, dtype=torch.float64),
        )

        result = dmlm.prob_core.pool_sequence(seq)

        assert result.log_var.item() >= dmlm.prob_core.LOGVAR_MIN - 1e-12

    def test_empty_mask(self):
        """Test pooling with every position masked out."""
        seq = dmlm.prob_core.GaussianSequence(
            torch.zeros(1, 2, 1), torch.zeros(1, 2, 1)
        )

        with pytest.raises(dmlm.errors.ContractViolationError, match="empty"):
            dmlm.prob_core.pool_sequence(seq, torch.tensor([[False, False]]))


class Test_mc_kl_oracle:
    """Test dmlm.prob_core.mc_kl_oracle()."""

    def test(self, make_gaussian):
        """Test the estimate agrees with the closed form."""
        p = make_gaussian([0.5], [0.2])
        q = make_gaussian([-0.3], [-0.4])

        estimate, stderr = dmlm.prob_core.mc_kl_oracle(
            p, q, 200_000, 0, return_stderr=True
        )

        assert stderr > 0
        assert abs(estimate - float(dmlm.prob_core.kl_diag(p, q))) < 5 * stderr

    def test_deterministic(self, make_gaussian):
        """Test that the estimate depends only on the seed."""
        p = make_gaussian([0.5], [0.2])
        q = make_gaussian([0.0], [0.0])

        first = dmlm.prob_core.mc_kl_oracle(p, q, 10_000, 7)
        second = dmlm.prob_core.mc_kl_oracle(p, q, 10_000, 7)

        assert first == second

    def test_too_few_samples(self, make_gaussian):
        """Test that small sample counts are refused."""
        p = make_gaussian([0.0], [0.0])

        with pytest.raises(dmlm.errors.ContractViolationError, match="10\\^4"):
            dmlm.prob_core.mc_kl_oracle(p, p, 9_999, 0)

    def test_batched(self):
        """Test that batched inputs are refused."""
        p = dmlm.prob_core.DiagGaussian(torch.zeros(2, 1), torch.zeros(2, 1))

        with pytest.raises(dmlm.errors.ContractViolationError, match="unbatched"):
            dmlm.prob_core.mc_kl_oracle(p, p, 10_000, 0)


class Test_quantile_w2_oracle:
    """Test dmlm.prob_core.quantile_w2_oracle()."""

    def test(self, make_gaussian):
        """Test the quadrature agrees with the closed form."""
        p = make_gaussian([0.7], [0.5])
        q = make_gaussian([-1.1], [-0.8])

        result = dmlm.prob_core.quantile_w2_oracle(p, q, 100_000)

        assert result == pytest.approx(float(dmlm.prob_core.w2_diag(p, q)), abs=1e-3)

    def test_not_one_dimensional(self, make_gaussian):
        """Test that d > 1 is refused."""
        p = make_gaussian([0.0, 0.0], [0.0, 0.0])

        with pytest.raises(dmlm.errors.ContractViolationError, match="d = 1"):
            dmlm.prob_core.quantile_w2_oracle(p, p, 100)


def test_float32_inputs():
    """Test that float32 tensors keep their dtype."""
    p = dmlm.prob_core.DiagGaussian(torch.zeros(2), torch.zeros(2))
    q = dmlm.prob_core.DiagGaussian(torch.ones(2), torch.zeros(2))

    assert dmlm.prob_core.kl_diag(p, q).dtype == torch.float32
    assert np.isclose(float(dmlm.prob_core.w2_diag(p, q)), math.sqrt(2.0))
