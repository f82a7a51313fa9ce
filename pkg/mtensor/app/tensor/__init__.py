# M-product tensor library
from .transform import (
    Tensor3,
    TransformKind,
    TransformSpec,
    from_hat,
    make_custom,
    make_dft,
    make_m1,
    make_random_invertible,
    make_transform,
    mode3_product,
    to_hat,
)
from .tensor_core import (
    MTensorContext,
    TTPCounter,
    conj_transpose,
    fro_norm,
    identity_tensor,
    index_m,
    m_inverse,
    m_power,
    m_product,
    rank_m,
    slice_ranks,
)
from .mqr import FullRankPair, MQrFactors, detect_uniform_rank, full_rank_decomposition, mqr_decompose, truncate
from .outer_inverse import (
    InverseKind,
    OuterInverseRequest,
    OuterVariant,
    ResidualReport,
    drazin_qr,
    group_inverse_qr,
    moore_penrose_qr,
    outer_inverse_full_rank,
    outer_inverse_qr,
    residual_report,
)
from .hyperpower import (
    Hpi19Coefficients,
    SolveOutcome,
    SolverConfig,
    cei,
    default_gamma,
    efficiency_table,
    hat_spectral_gamma,
    hpi9_step,
    hpi19_step,
    hpi_solve,
    hpi_standard_step,
    iei,
    initial_guess,
)
