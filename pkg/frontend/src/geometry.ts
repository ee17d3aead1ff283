/**
 * Coordinate plumbing between the screen and the wire.
 *
 * The server speaks normalized [0,1]² coordinates over a canvas whose pixel
 * geometry it reports in the session status; every conversion here takes that
 * canvas spec (or the on-screen rectangle derived from it) as the single
 * source of truth. Clamping is its own explicit step so callers can guarantee
 * a handle dragged off the canvas is pulled back into range before anything
 * is sent.
 */

export interface CanvasSpec {
  width: number;
  height: number;
}

export interface Rect {
  left: number;
  top: number;
  width: number;
  height: number;
}

export interface Point {
  x: number;
  y: number;
}

/** Clamp both coordinates into [0, 1]. */
export function clampUnit(p: Point): Point {
  return {
    x: Math.min(1, Math.max(0, p.x)),
    y: Math.min(1, Math.max(0, p.y)),
  };
}

export function isUnit(p: Point): boolean {
  return (
    Number.isFinite(p.x) &&
    Number.isFinite(p.y) &&
    p.x >= 0 &&
    p.x <= 1 &&
    p.y >= 0 &&
    p.y <= 1
  );
}

/**
 * Largest rectangle with the canvas spec's aspect ratio that fits the
 * viewport, centered. Views display the canvas inside this rectangle, so
 * screen↔normalized conversions stay faithful to the server geometry at any
 * window size.
 */
export function fitRect(
  canvas: CanvasSpec,
  viewport: { width: number; height: number },
): Rect {
  if (canvas.width <= 0 || canvas.height <= 0) {
    throw new Error(`canvas spec must be positive, got ${canvas.width}x${canvas.height}`);
  }
  const scale = Math.min(
    viewport.width / canvas.width,
    viewport.height / canvas.height,
  );
  const width = canvas.width * scale;
  const height = canvas.height * scale;
  return {
    left: (viewport.width - width) / 2,
    top: (viewport.height - height) / 2,
    width,
    height,
  };
}

/** Screen pixels → normalized coordinates. Not clamped; clamp explicitly. */
export function pixelToNormalized(px: number, py: number, rect: Rect): Point {
  if (rect.width <= 0 || rect.height <= 0) {
    throw new Error(`rect must have positive size, got ${rect.width}x${rect.height}`);
  }
  return {
    x: (px - rect.left) / rect.width,
    y: (py - rect.top) / rect.height,
  };
}

/** Normalized coordinates → screen pixels inside the given rectangle. */
export function normalizedToPixel(p: Point, rect: Rect): { px: number; py: number } {
  return {
    px: rect.left + p.x * rect.width,
    py: rect.top + p.y * rect.height,
  };
}
