/** Guidance-stroke canvas state and its rasterization to mask planes.
 *
 * Designers paint polyline strokes labeled foreground (glyph) or background.
 * Rasterization stamps a disc of the brush radius along every stroke segment
 * into a per-pixel label grid; strokes apply in draw order, so where labels
 * collide the last-drawn stroke wins and the resulting planes are always
 * disjoint. The wire encoding puts foreground in the red channel and
 * background in the blue channel of an RGB image.
 */

export type StrokeLabel = "foreground" | "background";

export interface StrokePoint {
  x: number;
  y: number;
}

export interface Stroke {
  points: StrokePoint[];
  radius: number;
  label: StrokeLabel;
}

export interface MaskCanvasState {
  width: number;
  height: number;
  strokes: Stroke[];
}

/** Binary (0|1) planes; a pixel is never set in both. */
export interface MaskPlanes {
  width: number;
  height: number;
  fg: Uint8Array;
  bg: Uint8Array;
}

function distanceToSegmentSquared(
  px: number,
  py: number,
  a: StrokePoint,
  b: StrokePoint,
): number {
  const dx = b.x - a.x;
  const dy = b.y - a.y;
  const lengthSq = dx * dx + dy * dy;
  let t = 0;
  if (lengthSq > 0) {
    t = ((px - a.x) * dx + (py - a.y) * dy) / lengthSq;
    t = Math.max(0, Math.min(1, t));
  }
  const cx = a.x + t * dx;
  const cy = a.y + t * dy;
  return (px - cx) * (px - cx) + (py - cy) * (py - cy);
}

function stampSegment(
  labels: Uint8Array,
  width: number,
  height: number,
  a: StrokePoint,
  b: StrokePoint,
  radius: number,
  value: number,
): void {
  const r = Math.max(0, radius);
  const minX = Math.max(0, Math.floor(Math.min(a.x, b.x) - r));
  const maxX = Math.min(width - 1, Math.ceil(Math.max(a.x, b.x) + r));
  const minY = Math.max(0, Math.floor(Math.min(a.y, b.y) - r));
  const maxY = Math.min(height - 1, Math.ceil(Math.max(a.y, b.y) + r));
  const rSq = r * r;
  for (let y = minY; y <= maxY; y++) {
    for (let x = minX; x <= maxX; x++) {
      if (distanceToSegmentSquared(x, y, a, b) <= rSq) {
        labels[y * width + x] = value;
      }
    }
  }
}

/** Rasterize strokes to disjoint planes; null when there are no strokes. */
export function rasterizeStrokes(state: MaskCanvasState): MaskPlanes | null {
  if (state.strokes.length === 0) {
    return null;
  }
  if (state.width <= 0 || state.height <= 0) {
    throw new Error(`mask canvas must be positive, got ${state.width}x${state.height}`);
  }
  const labels = new Uint8Array(state.width * state.height); // 0 none, 1 fg, 2 bg
  for (const stroke of state.strokes) {
    const value = stroke.label === "foreground" ? 1 : 2;
    if (stroke.points.length === 1) {
      const only = stroke.points[0]!;
      stampSegment(labels, state.width, state.height, only, only, stroke.radius, value);
    }
    for (let i = 0; i + 1 < stroke.points.length; i++) {
      stampSegment(
        labels,
        state.width,
        state.height,
        stroke.points[i]!,
        stroke.points[i + 1]!,
        stroke.radius,
        value,
      );
    }
  }
  const fg = new Uint8Array(labels.length);
  const bg = new Uint8Array(labels.length);
  for (let i = 0; i < labels.length; i++) {
    if (labels[i] === 1) fg[i] = 1;
    else if (labels[i] === 2) bg[i] = 1;
  }
  return { width: state.width, height: state.height, fg, bg };
}

/** Pack planes into RGB bytes: red carries foreground, blue background. */
export function planesToRGB(planes: MaskPlanes): Uint8Array {
  const rgb = new Uint8Array(planes.width * planes.height * 3);
  for (let i = 0; i < planes.fg.length; i++) {
    rgb[i * 3] = planes.fg[i] ? 255 : 0;
    rgb[i * 3 + 2] = planes.bg[i] ? 255 : 0;
  }
  return rgb;
}

/** Recover planes from RGB bytes; rejects pixels marked as both. */
export function rgbToPlanes(rgb: Uint8Array, width: number, height: number): MaskPlanes {
  if (rgb.length !== width * height * 3) {
    throw new Error(`expected ${width * height * 3} RGB bytes, got ${rgb.length}`);
  }
  const fg = new Uint8Array(width * height);
  const bg = new Uint8Array(width * height);
  for (let i = 0; i < width * height; i++) {
    const red = rgb[i * 3]! >= 128;
    const blue = rgb[i * 3 + 2]! >= 128;
    if (red && blue) {
      throw new Error(`pixel ${i} is marked both foreground and background`);
    }
    if (red) fg[i] = 1;
    if (blue) bg[i] = 1;
  }
  return { width, height, fg, bg };
}

/** Build planes directly from a known glyph bitmap (1 = glyph pixel). */
export function planesFromBitmap(bitmap: Uint8Array, width: number, height: number): MaskPlanes {
  if (bitmap.length !== width * height) {
    throw new Error(`expected ${width * height} bitmap bytes, got ${bitmap.length}`);
  }
  const fg = new Uint8Array(bitmap.length);
  const bg = new Uint8Array(bitmap.length);
  for (let i = 0; i < bitmap.length; i++) {
    if (bitmap[i]) fg[i] = 1;
    else bg[i] = 1;
  }
  return { width, height, fg, bg };
}
