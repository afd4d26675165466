"""Operator-Bernstein inequality for sampling Hermitian matrices with and
without replacement, Hoeffding's coupling, and the sampling operator."""

from .hermitian import (
    HermitianMatrix,
    SpectralError,
    matrix_sum,
    operator_norm,
    trace_exp,
)
from .ensembles import MatrixEnsemble, analyze_ensemble, center_ensemble, random_ensemble
from .samplers import (
    Mode,
    SampleVector,
    realize,
    sample_bernoulli,
    sample_with_replacement,
    sample_without_replacement,
)
from .coupling import (
    CouplingTrace,
    ExactDistribution,
    conditional_step_probability,
    coupling_sum_expectation,
    exact_coupling_distribution,
    jensen_domination_check,
    run_coupling,
)
from .bounds import (
    BernsteinParams,
    TailReport,
    bernstein_bound,
    empirical_mgf,
    empirical_tail,
    exact_mgf,
)
from .sampling_operator import (
    HermitianBasis,
    SamplingOperatorDiag,
    apply_sampling_operator,
    build_basis,
    operator_norm_study,
    superoperator_matrix,
)

__version__ = "0.1.0"
