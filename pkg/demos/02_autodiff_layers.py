"""
The autodiff layers
===================

The generator and discriminators are built from a small reverse-mode
autodiff library. This checks a few gradients numerically and shows that
the upsampling layer is the adjoint of the strided convolution.
"""

import numpy as np

from fastvgan.tensor import Tensor, conv2d, conv2d_transposed, grad_check, residual_block, rmse, swish

rng = np.random.default_rng(0)

# layout is channels last: (batch, time, frequency, channels)
x = Tensor(rng.standard_normal((1, 6, 5, 3)))
w = Tensor(rng.standard_normal((3, 3, 3, 4)))
b = Tensor(np.zeros(4))
target = rng.standard_normal((1, 6, 5, 4))

err = grad_check(lambda x, w, b: rmse(swish(conv2d(x, w, b)), target), [x, w, b])
print(f"conv2d + swish + rmse: worst relative gradient error {err:.1e}")

ws = [Tensor(rng.standard_normal(s) * 0.3) for s in [(3, 3, 3, 3), (3,), (3, 3, 3, 3), (3,)]]
err = grad_check(lambda x, *p: residual_block(x, *p).square().sum(), [x] + ws)
print(f"residual block: worst relative gradient error {err:.1e}")

# <conv(x), y> == <x, conv_transposed(y)> with the shared kernel
k = rng.standard_normal((3, 6, 2, 4))  # 3 x (3 * 2) kernel for frequency stride 2
u = rng.standard_normal((4, 10, 2))
v = rng.standard_normal((4, 5, 4))
lhs = np.sum(conv2d(u, k, None, (1, 2)).data * v)
rhs = np.sum(u * conv2d_transposed(v, k, None, (1, 2)).data)
print(f"adjoint identity: {lhs:.10f} vs {rhs:.10f}")
print("frequency upsampling:", v.shape, "->", conv2d_transposed(v, k, None, (1, 2)).shape)
