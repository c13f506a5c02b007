from .autodiff import Graph, Tensor, backward
from .gradcheck import GradCheckReport, grad_check
from .linalg import Matrix, as_matrix, cholesky_solve, matmul
from .optim import OptimizerKind, OptimizerState, step
from .packing import pack_array, read_document, unpack_array, write_document
from .rng import RNG_ALGORITHM, Rng

__all__ = (
    'Graph',
    'Tensor',
    'backward',
    'GradCheckReport',
    'grad_check',
    'Matrix',
    'as_matrix',
    'cholesky_solve',
    'matmul',
    'OptimizerKind',
    'OptimizerState',
    'step',
    'pack_array',
    'read_document',
    'unpack_array',
    'write_document',
    'RNG_ALGORITHM',
    'Rng',
)
