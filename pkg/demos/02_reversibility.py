"""
How far is a small rotation from doing nothing?
===============================================

For a unitary U, the fair mixture of U and its inverse equals "do nothing"
except with probability p_d.  For a qubit rotation by theta this is
sin^2(theta), quadratic in the angle.
"""

import numpy as np

from ctxresponse import certify, channels, numkit

X = numkit.PAULI_X

for theta in (1e-3, 1e-2, 0.1, 0.5):
    cert = channels.minimal_pd(numkit.expm_i_hermitian(X, theta))
    print(f"theta = {theta:<6} p_d = {cert.p_d:.10e}   sin^2 = {np.sin(theta)**2:.10e}")

# The residual channel is a genuine channel, and the decomposition closes.
cert = channels.minimal_pd(numkit.expm_i_hermitian(X, 0.2))
print(channels.is_cptp(cert.residual_channel))
print("reconstruction error", cert.reconstruction_error)

# Depolarising noise: p_d = p~ + s (1 - p~)
noisy = channels.mix_with_depolarising(cert, 0.1)
print("noisy p_d", noisy.p_d, "=", cert.p_d + 0.1 * (1 - cert.p_d))

# %%
# Lemma 1 on a qubit: J~ = 1 - c/C has eigenvalues c/C and 2 - c/C.
print(certify.build_jtilde([0.0, 1.0], 2.0).jtilde_eigenvalues)

# In three dimensions the matrix always has a (near) null direction,
# so the scan only ever reaches a marginal verdict.
scan = certify.scan_jtilde([0.0, 1.0, 3.0])
print(scan.verdict, scan.min_eigenvalue_over_C, "kernel", scan.kernel_dim)

# A qutrit unitary with three distinct eigenphases cannot be written as
# identity plus a small correction at all: p_d = 1.
u = np.diag(np.exp(-1j * np.array([0.0, 0.5, 1.3])))
print("qutrit p_d", channels.minimal_pd(u).p_d)
