"""Compiled inner loops for the layered rotation + CZ circuit.

All kernels act on a single complex128 amplitude vector in place. Qubit ``q``
is bit ``q`` of the basis index (little-endian). Axis codes: 0=X, 1=Y, 2=Z.
A rotation is ``exp(-i * angle * G / 2)``.
"""

import numba as nb
import numpy as np

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


@nb.njit(cache=True)
def rotate(psi, q, axis, c, s):
    """Apply cos(a/2) I - i sin(a/2) G on qubit q, given c=cos(a/2), s=sin(a/2)."""
    lo = 1 << q
    dim = psi.shape[0]
    if axis == 0:
        ms = -1j * s
        for h in range(0, dim, 2 * lo):
            for i in range(h, h + lo):
                x = psi[i]
                y = psi[i + lo]
                psi[i] = c * x + ms * y
                psi[i + lo] = ms * x + c * y
    elif axis == 1:
        for h in range(0, dim, 2 * lo):
            for i in range(h, h + lo):
                x = psi[i]
                y = psi[i + lo]
                psi[i] = c * x - s * y
                psi[i + lo] = s * x + c * y
    else:
        p0 = c - 1j * s
        p1 = c + 1j * s
        for h in range(0, dim, 2 * lo):
            for i in range(h, h + lo):
                psi[i] *= p0
                psi[i + lo] *= p1


@nb.njit(cache=True)
def generator_overlap(lam, psi, q, axis):
    """Return <lam| G_q |psi>."""
    lo = 1 << q
    dim = psi.shape[0]
    acc = 0j
    if axis == 0:
        for h in range(0, dim, 2 * lo):
            for i in range(h, h + lo):
                acc += np.conj(lam[i]) * psi[i + lo] + np.conj(lam[i + lo]) * psi[i]
    elif axis == 1:
        for h in range(0, dim, 2 * lo):
            for i in range(h, h + lo):
                acc += -1j * np.conj(lam[i]) * psi[i + lo] + 1j * np.conj(lam[i + lo]) * psi[i]
    else:
        for h in range(0, dim, 2 * lo):
            for i in range(h, h + lo):
                acc += np.conj(lam[i]) * psi[i] - np.conj(lam[i + lo]) * psi[i + lo]
    return acc


@nb.njit(cache=True)
def add_generator(out, psi, q, axis, coef):
    """out += coef * G_q |psi>."""
    lo = 1 << q
    dim = psi.shape[0]
    if axis == 0:
        for h in range(0, dim, 2 * lo):
            for i in range(h, h + lo):
                out[i] += coef * psi[i + lo]
                out[i + lo] += coef * psi[i]
    elif axis == 1:
        for h in range(0, dim, 2 * lo):
            for i in range(h, h + lo):
                out[i] += coef * (-1j) * psi[i + lo]
                out[i + lo] += coef * 1j * psi[i]
    else:
        for h in range(0, dim, 2 * lo):
            for i in range(h, h + lo):
                out[i] += coef * psi[i]
                out[i + lo] -= coef * psi[i + lo]


@nb.njit(cache=True)
def forward(psi, axes, angles, cz):
    """Apply layers (rotations on every qubit, then the diagonal CZ entangler)."""
    p, n = axes.shape
    for layer in range(p):
        for q in range(n):
            half = 0.5 * angles[layer, q]
            rotate(psi, q, axes[layer, q], np.cos(half), np.sin(half))
        for i in range(psi.shape[0]):
            psi[i] *= cz[i]


@nb.njit(cache=True)
def backward_gradient(psi, lam, axes, angles, cz, grad):
    """Reverse-mode sweep; psi is the final state and lam = H psi.

    Both vectors are consumed. ``grad[l, q]`` receives dE/dangle[l, q].
    """
    p, n = axes.shape
    dim = psi.shape[0]
    for layer in range(p - 1, -1, -1):
        for i in range(dim):
            psi[i] *= cz[i]
            lam[i] *= cz[i]
        # Rotations within a layer commute, so every gradient entry of the
        # layer can be read off the same pair of vectors.
        for q in range(n):
            grad[layer, q] = generator_overlap(lam, psi, q, axes[layer, q]).imag
        for q in range(n):
            half = 0.5 * angles[layer, q]
            c = np.cos(half)
            s = -np.sin(half)
            rotate(psi, q, axes[layer, q], c, s)
            rotate(lam, q, axes[layer, q], c, s)


@nb.njit(cache=True)
def forward_tangent(psi, tan, axes, angles, cz, direction):
    """Forward pass carrying the directional derivative along ``direction``."""
    p, n = axes.shape
    dim = psi.shape[0]
    for layer in range(p):
        for q in range(n):
            half = 0.5 * angles[layer, q]
            c = np.cos(half)
            s = np.sin(half)
            ax = axes[layer, q]
            rotate(psi, q, ax, c, s)
            rotate(tan, q, ax, c, s)
            v = direction[layer, q]
            if v != 0.0:
                add_generator(tan, psi, q, ax, -0.5j * v)
        for i in range(dim):
            psi[i] *= cz[i]
            tan[i] *= cz[i]


@nb.njit(cache=True)
def basis_probabilities(psi, configs, out):
    """Born probabilities after rotating each qubit into its measurement basis.

    ``configs[u, q]`` is the basis of qubit q for configuration u; outcome
    index bit q = 0 corresponds to the +1 eigenvector of that Pauli.
    """
    n_cfg, n = configs.shape
    dim = psi.shape[0]
    work = np.empty(dim, dtype=np.complex128)
    for u in range(n_cfg):
        for i in range(dim):
            work[i] = psi[i]
        for q in range(n):
            b = configs[u, q]
            if b == 2:
                continue
            lo = 1 << q
            for h in range(0, dim, 2 * lo):
                for i in range(h, h + lo):
                    x = work[i]
                    y = work[i + lo]
                    if b == 1:
                        y = -1j * y
                    work[i] = (x + y) * _INV_SQRT2
                    work[i + lo] = (x - y) * _INV_SQRT2
        for i in range(dim):
            out[u, i] = work[i].real * work[i].real + work[i].imag * work[i].imag
