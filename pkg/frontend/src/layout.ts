// Pure geometry: device-pixel bounds to viewport boxes, plus the 3x3
// grid overlay lines.

export interface Box {
  left: number;
  top: number;
  width: number;
  height: number;
}

export interface Viewport {
  width: number;
  height: number;
}

/** Uniform scale that fits the device screen inside the viewport. */
export function viewportScale(screen: [number, number], viewport: Viewport): number {
  const [w, h] = screen;
  if (w <= 0 || h <= 0) {
    throw new Error(`degenerate screen size ${w}x${h}`);
  }
  return Math.min(viewport.width / w, viewport.height / h);
}

export function scaleBounds(
  bounds: [number, number, number, number],
  screen: [number, number],
  viewport: Viewport,
): Box {
  const s = viewportScale(screen, viewport);
  const [x0, y0, x1, y1] = bounds;
  return {
    left: x0 * s,
    top: y0 * s,
    width: (x1 - x0) * s,
    height: (y1 - y0) * s,
  };
}

/** The rendered size of the whole window at the same scale. */
export function windowBox(screen: [number, number], viewport: Viewport): Box {
  const s = viewportScale(screen, viewport);
  return { left: 0, top: 0, width: screen[0] * s, height: screen[1] * s };
}

export interface GridLines {
  vertical: number[];
  horizontal: number[];
}

/** Interior 3x3 grid lines in viewport coordinates. */
export function gridLines(screen: [number, number], viewport: Viewport): GridLines {
  const s = viewportScale(screen, viewport);
  const [w, h] = screen;
  return {
    vertical: [1, 2].map((i) => (i * w * s) / 3),
    horizontal: [1, 2].map((i) => (i * h * s) / 3),
  };
}
