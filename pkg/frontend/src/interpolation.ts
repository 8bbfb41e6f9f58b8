/** Style interpolation panel: up to four weighted style slots.
 *
 * Sliders edit raw non-negative weights; committing normalizes them to sum
 * to 1, which is what the service requires. Live re-rendering goes through
 * a debounce so a slider drag issues one request, not dozens.
 */

import type { WeightedStyle } from "./api.js";

export const MAX_SLOTS = 4;
export const DEBOUNCE_MS = 300;

export interface StyleSlot {
  image: string;
  weight: number;
}

export interface InterpolationPanelState {
  slots: StyleSlot[];
}

export function emptyPanel(): InterpolationPanelState {
  return { slots: [] };
}

export function addSlot(state: InterpolationPanelState, image: string): InterpolationPanelState {
  if (state.slots.length >= MAX_SLOTS) {
    throw new Error(`at most ${MAX_SLOTS} style slots`);
  }
  return { slots: [...state.slots, { image, weight: 1 }] };
}

export function removeSlot(state: InterpolationPanelState, index: number): InterpolationPanelState {
  return { slots: state.slots.filter((_, i) => i !== index) };
}

export function setWeight(
  state: InterpolationPanelState,
  index: number,
  weight: number,
): InterpolationPanelState {
  if (!Number.isFinite(weight) || weight < 0) {
    throw new Error(`weights must be finite and >= 0, got ${weight}`);
  }
  return {
    slots: state.slots.map((slot, i) => (i === index ? { ...slot, weight } : slot)),
  };
}

/** Normalized weights for the request; the panel state keeps raw values. */
export function commit(state: InterpolationPanelState): WeightedStyle[] {
  if (state.slots.length === 0) {
    throw new Error("no styles to interpolate");
  }
  const total = state.slots.reduce((sum, slot) => sum + slot.weight, 0);
  if (total <= 0) {
    throw new Error("at least one weight must be positive");
  }
  return state.slots.map((slot) => ({ image: slot.image, weight: slot.weight / total }));
}

export interface Debounced<A extends unknown[]> {
  (...args: A): void;
  cancel(): void;
}

export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  ms: number = DEBOUNCE_MS,
): Debounced<A> {
  let handle: ReturnType<typeof setTimeout> | undefined;
  const wrapped = (...args: A): void => {
    if (handle !== undefined) clearTimeout(handle);
    handle = setTimeout(() => {
      handle = undefined;
      fn(...args);
    }, ms);
  };
  wrapped.cancel = () => {
    if (handle !== undefined) clearTimeout(handle);
    handle = undefined;
  };
  return wrapped;
}
