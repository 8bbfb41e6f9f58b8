import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import {
  DEBOUNCE_MS,
  MAX_SLOTS,
  addSlot,
  commit,
  debounce,
  emptyPanel,
  removeSlot,
  setWeight,
} from "../src/interpolation.js";

describe("interpolation panel", () => {
  it("caps the panel at four slots", () => {
    let panel = emptyPanel();
    for (let i = 0; i < MAX_SLOTS; i++) {
      panel = addSlot(panel, `img${i}`);
    }
    expect(() => addSlot(panel, "overflow")).toThrow(/at most 4/);
    panel = removeSlot(panel, 0);
    expect(panel.slots.map((s) => s.image)).toEqual(["img1", "img2", "img3"]);
  });

  it("normalizes weights to sum 1 on commit", () => {
    let panel = addSlot(addSlot(addSlot(emptyPanel(), "a"), "b"), "c");
    panel = setWeight(panel, 0, 2);
    panel = setWeight(panel, 1, 1);
    panel = setWeight(panel, 2, 1);
    const committed = commit(panel);
    expect(committed.map((s) => s.weight)).toEqual([0.5, 0.25, 0.25]);
    expect(committed.reduce((sum, s) => sum + s.weight, 0)).toBeCloseTo(1, 12);
    // committing does not mutate the raw panel weights
    expect(panel.slots.map((s) => s.weight)).toEqual([2, 1, 1]);
  });

  it("keeps zero-weight slots in the committed request", () => {
    let panel = addSlot(addSlot(emptyPanel(), "a"), "b");
    panel = setWeight(panel, 1, 0);
    expect(commit(panel)).toEqual([
      { image: "a", weight: 1 },
      { image: "b", weight: 0 },
    ]);
  });

  it("rejects negative and non-finite weights", () => {
    const panel = addSlot(emptyPanel(), "a");
    expect(() => setWeight(panel, 0, -1)).toThrow(/>= 0/);
    expect(() => setWeight(panel, 0, Number.NaN)).toThrow(/finite/);
  });

  it("rejects commits with nothing to send", () => {
    expect(() => commit(emptyPanel())).toThrow(/no styles/);
    const allZero = setWeight(addSlot(emptyPanel(), "a"), 0, 0);
    expect(() => commit(allZero)).toThrow(/positive/);
  });
});

describe("debounce", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });
  afterEach(() => {
    vi.useRealTimers();
  });

  it("fires once after the quiet period with the last arguments", () => {
    const calls: number[] = [];
    const fn = debounce((v: number) => calls.push(v));
    fn(1);
    vi.advanceTimersByTime(DEBOUNCE_MS - 50);
    fn(2);
    fn(3);
    vi.advanceTimersByTime(DEBOUNCE_MS - 1);
    expect(calls).toEqual([]);
    vi.advanceTimersByTime(1);
    expect(calls).toEqual([3]);
  });

  it("can be cancelled", () => {
    const calls: number[] = [];
    const fn = debounce((v: number) => calls.push(v), 100);
    fn(1);
    fn.cancel();
    vi.advanceTimersByTime(500);
    expect(calls).toEqual([]);
  });
});
