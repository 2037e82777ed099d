"""Small ready-made multibody systems used by tests and scripts."""
from __future__ import annotations

import math

import numpy as np

from .body import box_inertia, spatial_inertia
from .multibody import Body, Joint, MultibodyTree
from .rotations import rot_x, rot_y, rot_z
from .spatial import MotionTransform


def double_pendulum(m1=1.0, m2=1.0, l1=1.0, l2=1.0) -> MultibodyTree:
    """Planar double pendulum of point masses hanging along -y at q = 0.

    ``q1`` is the first link's angle from the downward vertical, ``q2`` the
    second link's angle relative to the first.  Use gravity ``(0, -g, 0)``.
    """
    z = (0.0, 0.0, 1.0)
    j1 = Joint("revolute", z, MotionTransform(rot_z(-math.pi / 2), np.zeros(3)))
    j2 = Joint("revolute", z, MotionTransform(np.eye(3), (l1, 0.0, 0.0)))
    return MultibodyTree([
        Body("link1", spatial_inertia(m1, (l1, 0.0, 0.0), np.zeros((3, 3))), j1),
        Body("link2", spatial_inertia(m2, (l2, 0.0, 0.0), np.zeros((3, 3))), j2, parent=0),
    ])


def spatial_chain(n: int = 3, root: str = "revolute", rotation: str = "euler") -> MultibodyTree:
    """Serial chain of boxes with skewed revolute axes and rotated joint offsets.

    ``root="free6"`` makes the first joint a floating base using ``rotation``.
    """
    axes = [(0.0, 0.0, 1.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0),
            tuple(np.array([1.0, 1.0, 1.0]) / math.sqrt(3.0))]
    bodies = []
    for i in range(n):
        size = (0.6 + 0.1 * i, 0.2, 0.15)
        inertia = box_inertia(1.0 + 0.3 * i, size, com=(0.3 + 0.05 * i, 0.02, -0.01))
        if i == 0 and root == "free6":
            joint = Joint("free6", rotation=rotation)
        elif i == 0:
            joint = Joint("revolute", axes[0])
        else:
            offset = MotionTransform(rot_x(0.3 * i) @ rot_y(-0.2), (0.6 + 0.1 * (i - 1), 0.05, 0.0))
            joint = Joint("revolute", axes[i % len(axes)], offset)
        bodies.append(Body(f"link{i + 1}", inertia, joint, parent=i - 1))
    return MultibodyTree(bodies)


def branched_tree() -> MultibodyTree:
    """A root with two children, one of which carries a prismatic grandchild."""
    th = box_inertia(1.0, (0.4, 0.3, 0.2), com=(0.1, 0.0, 0.05))
    return MultibodyTree([
        Body("base", th, Joint("revolute", (0.0, 0.0, 1.0))),
        Body("left", th, Joint("revolute", (1.0, 0.0, 0.0), MotionTransform(rot_z(0.4), (0.3, 0.2, 0.0))), 0),
        Body("right", th, Joint("revolute", (0.0, 1.0, 0.0), MotionTransform(rot_x(-0.5), (0.3, -0.2, 0.1))), 0),
        Body("slider", th, Joint("prismatic", (0.0, 0.0, 1.0), MotionTransform(np.eye(3), (0.2, 0.0, 0.0))), 1),
    ])
