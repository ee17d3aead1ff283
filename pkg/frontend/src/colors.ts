/**
 * Stable identity colors for draggable handles.
 *
 * Keypoint i gets the same color on every frame and in every thumbnail, so
 * the eye can follow one identity through the animation. Hues step by the
 * golden angle, which keeps neighboring indices visually far apart.
 */

const GOLDEN_ANGLE = 137.50776405003785;

/** CSS color for keypoint identity `i` (1-based wire index). */
export function keypointColor(i: number): string {
  if (!Number.isInteger(i) || i < 1) {
    throw new Error(`keypoint index must be a positive integer, got ${i}`);
  }
  const hue = ((i - 1) * GOLDEN_ANGLE) % 360;
  return `hsl(${hue.toFixed(2)}, 85%, 45%)`;
}

/** Accent used for control-point handles (identity matters less there). */
export const CONTROL_COLOR = "hsl(210, 10%, 35%)";
export const CONTROL_OVERRIDE_COLOR = "hsl(32, 95%, 45%)";
