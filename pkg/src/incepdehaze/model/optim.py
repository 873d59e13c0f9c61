"""Adaptive-moment optimiser over a :class:`ModelParams` subset."""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    lr: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    eps: float = 1e-8
    step: dict = field(default_factory=dict)
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def copy(self):
        return AdamState(
            self.lr,
            self.beta1,
            self.beta2,
            self.eps,
            dict(self.step),
            {k: a.copy() for k, a in self.m.items()},
            {k: a.copy() for k, a in self.v.items()},
        )


def adam_step(params, names, state: AdamState):
    """Update ``params[name]`` in place for every name that has a gradient.

    Step counters are per-parameter so the generator and discriminator can
    share one state object while being updated at different times.
    """
    for name in names:
        p = params[name]
        g = p.grad
        if g is None:
            continue
        dt = p.dtype.type
        if name not in state.m:
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
            state.step[name] = 0
        state.step[name] += 1
        t = state.step[name]
        m, v = state.m[name], state.v[name]
        m *= dt(state.beta1)
        m += dt(1.0 - state.beta1) * g
        v *= dt(state.beta2)
        v += dt(1.0 - state.beta2) * (g * g)
        mhat = m / dt(1.0 - state.beta1**t)
        vhat = v / dt(1.0 - state.beta2**t)
        p.data -= dt(state.lr) * mhat / (np.sqrt(vhat) + dt(state.eps))


def grad_norm(params, names):
    total = 0.0
    for name in names:
        g = params[name].grad
        if g is not None:
            total += float(np.sum(np.square(g, dtype=np.float64)))
    return total**0.5
