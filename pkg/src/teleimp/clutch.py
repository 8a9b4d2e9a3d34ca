"""Clutch-based hand-to-target mapping.

While the clutch is held the impedance target follows the hand relative to
the anchors recorded at the last clutch transition; released, the target
freezes at its anchor and the target twist is zero.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .geometry import Pose, Twist, compose, quat_conj, quat_mul


@dataclass(frozen=True)
class ClutchState:
    """Engagement bit plus the hand/target anchor poses recorded at the most
    recent change of clutch state."""

    engaged: bool
    hand_anchor: Pose
    target_anchor: Pose
    # suppress hand twist on the press sample to avoid a stale-velocity spike
    just_pressed: bool = False


def clutch_update(state: ClutchState, hand_pose: Pose, hand_twist: Twist,
                  button: bool, current_target: Pose):
    """One step of the hand-target mapping.

    Returns (new_state, target_pose, target_twist). On any button
    transition both anchors are re-recorded first, so the emitted target is
    continuous across the transition.
    """
    button = bool(button)
    if button != state.engaged:
        state = ClutchState(engaged=button,
                            hand_anchor=hand_pose,
                            target_anchor=current_target,
                            just_pressed=button)
    if state.engaged:
        dp = hand_pose.p - state.hand_anchor.p
        q_rel = quat_mul(quat_conj(state.hand_anchor.q), hand_pose.q)
        target = Pose(p=state.target_anchor.p + dp,
                      q=quat_mul(state.target_anchor.q, q_rel))
        twist = Twist.zero() if state.just_pressed else hand_twist
        if state.just_pressed:
            state = replace(state, just_pressed=False)
        return state, target, twist
    return state, state.target_anchor, Twist.zero()


@dataclass
class ClutchChannel:
    """Stateful clutch for one arm, with optional workspace clamping.

    Anchors before the first input: the target anchor starts at the arm's
    home target and the hand anchor is taken from the first received hand
    pose.
    """

    home_target: Pose
    workspace: np.ndarray | None = None   # (2, 3) min/max corners, or None

    def __post_init__(self):
        self._state = None
        self._last_target = self.home_target

    @property
    def state(self) -> ClutchState | None:
        return self._state

    @property
    def last_target(self) -> Pose:
        return self._last_target

    def update(self, hand_pose: Pose, hand_twist: Twist, button: bool):
        if self._state is None:
            self._state = ClutchState(engaged=False,
                                      hand_anchor=hand_pose,
                                      target_anchor=self.home_target)
        # Transitions anchor at the last *emitted* target, not one recomputed
        # from this sample's hand pose: a hand that jumps on the same sample
        # it releases (or presses) must not drag the frozen target with it.
        self._state, target, twist = clutch_update(
            self._state, hand_pose, hand_twist, button, self._last_target)
        if self.workspace is not None:
            target = Pose(p=np.clip(target.p, self.workspace[0], self.workspace[1]),
                          q=target.q)
        self._last_target = target
        return target, twist

    def release(self):
        """Force-release the clutch (e.g. on connection loss), freezing the
        target where it is."""
        if self._state is not None and self._state.engaged:
            self._state = ClutchState(engaged=False,
                                      hand_anchor=self._state.hand_anchor,
                                      target_anchor=self._last_target)
