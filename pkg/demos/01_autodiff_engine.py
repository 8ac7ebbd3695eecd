"""Tour of the tensor engine: dynamic graphs, reverse-mode gradients,
and the momentum-SGD update rule.

Run:  python demos/01_autodiff_engine.py
"""

import numpy as np

from ttakit.engine import (
    SgdState,
    Tensor,
    conv2d,
    gradients,
    matmul,
    mean,
    relu,
    sgd_step,
    softmax,
    tsum,
)

# ---------------------------------------------------------------- scalars
# d(x^2)/dx at x = 3
x = Tensor(3.0, requires_grad=True)
y = x * x
y.backward()
print("d(x^2)/dx at 3       :", x.grad)  # 6.0

# ------------------------------------------------------- a tiny MLP layer
rng = np.random.default_rng(0)
w = Tensor(rng.normal(size=(4, 3)), requires_grad=True)
b = Tensor(np.zeros(3), requires_grad=True)
inp = Tensor(rng.normal(size=(2, 4)))

logits = matmul(inp, w) + b
post = softmax(logits)
print("posterior rows sum to:", post.data.sum(axis=1))

# cross-entropy against class 0 for both rows, then gradients
from ttakit.engine import clip_min, log

onehot = Tensor(np.eye(3)[[0, 0]])
loss = -mean(tsum(onehot * log(clip_min(post, 1e-12)), axis=-1))
grads = gradients(loss, {"w": w, "b": b})
print("loss                 :", loss.item())
print("grad w shape         :", grads["w"].shape)

# --------------------------------------------- gradients vs finite differences
def numeric_grad(f, arr, eps=1e-5):
    g = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        orig = arr[i]
        arr[i] = orig + eps
        fp = f()
        arr[i] = orig - eps
        fm = f()
        arr[i] = orig
        g[i] = (fp - fm) / (2 * eps)
    return g


w_arr = w.data.copy()


def loss_value():
    p = softmax(matmul(inp, Tensor(w_arr)) + b).data
    return float(-np.mean(np.log(p[[0, 1], [0, 0]])))


fd = numeric_grad(loss_value, w_arr)
print("max |analytic - FD|  :", np.abs(grads["w"] - fd).max())

# ------------------------------------------------------------ convolution
img = Tensor(rng.uniform(size=(1, 3, 8, 8)))
ident = np.zeros((3, 3, 3, 3))
for c in range(3):
    ident[c, c, 1, 1] = 1.0
out = conv2d(img, Tensor(ident), stride=1, padding=1)
print("identity conv exact  :", np.array_equal(out.data, img.data))

# ------------------------------------------------------------- optimizer
# two steps of momentum SGD on a constant gradient: buf 1 -> 1.9,
# param 1 -> 0.9 -> 0.71
p = Tensor(np.array([1.0]))
state = SgdState(lr=0.1, momentum=0.9, weight_decay=0.0)
for step in range(2):
    sgd_step({"p": p}, {"p": np.array([1.0])}, state)
    print(f"after step {step + 1}: param={p.data[0]:.4f} buf={state.buffers['p'][0]:.4f}")
