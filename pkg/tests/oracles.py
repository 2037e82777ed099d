"""Closed-form reference dynamics derived independently of the library."""
import math

import numpy as np


def double_pendulum_accel(q, qd, m1, m2, l1, l2, g):
    """Textbook double pendulum with absolute angles a1 = q1, a2 = q1 + q2.

    Returns the relative accelerations (q1'', q2'').
    """
    a1, a2 = q[0], q[0] + q[1]
    w1, w2 = qd[0], qd[0] + qd[1]
    s, c = math.sin(a1 - a2), math.cos(a1 - a2)
    mass = np.array([[(m1 + m2) * l1, m2 * l2 * c], [m2 * l1 * c, m2 * l2]])
    rhs = np.array([-m2 * l2 * w2**2 * s - (m1 + m2) * g * math.sin(a1),
                    m2 * l1 * w1**2 * s - m2 * g * math.sin(a2)])
    acc1, acc2 = np.linalg.solve(mass, rhs)
    return np.array([acc1, acc2 - acc1])


def double_pendulum_energy(q, qd, m1, m2, l1, l2, g):
    a1, a2 = q[0], q[0] + q[1]
    w1, w2 = qd[0], qd[0] + qd[1]
    kin = 0.5 * (m1 + m2) * l1**2 * w1**2 + 0.5 * m2 * l2**2 * w2**2 + m2 * l1 * l2 * w1 * w2 * math.cos(a1 - a2)
    pot = -(m1 + m2) * g * l1 * math.cos(a1) - m2 * g * l2 * math.cos(a2)
    return kin + pot
