import { describe, expect, it } from "vitest";

import {
  STEPS,
  canGoBack,
  canGoNext,
  goBack,
  goNext,
  initialViewState,
  markClean,
  markDirty,
  markFailed,
  stepIndex,
  type WizardViewState,
} from "../src/state.js";

describe("wizard steps", () => {
  it("starts on the first step, clean", () => {
    const state = initialViewState();
    expect(state.step).toBe("Cases");
    expect(state.dirty).toBe(false);
    expect(state.error).toBeNull();
  });

  it("orders the four steps as the wizard flow", () => {
    expect(STEPS).toEqual(["Cases", "SourcesSinks", "GroundTruth", "Results"]);
  });

  it("moves forward by exactly one step", () => {
    let state = initialViewState();
    const seen = [state.step];
    while (canGoNext(state)) {
      const before = stepIndex(state.step);
      state = goNext(state);
      expect(stepIndex(state.step)).toBe(before + 1);
      seen.push(state.step);
    }
    expect(seen).toEqual([...STEPS]);
  });

  it("moves backward by exactly one step", () => {
    let state: WizardViewState = { step: "Results", dirty: false, error: null };
    while (canGoBack(state)) {
      const before = stepIndex(state.step);
      state = goBack(state);
      expect(stepIndex(state.step)).toBe(before - 1);
    }
    expect(state.step).toBe("Cases");
  });

  it("clamps at both ends instead of wrapping", () => {
    const first = initialViewState();
    expect(goBack(first)).toBe(first);
    const last: WizardViewState = { step: "Results", dirty: false, error: null };
    expect(goNext(last)).toBe(last);
  });

  it("never skips a step in any transition sequence", () => {
    // Walk a pseudo-random 200-move path; every move is +-1 or clamped.
    let state = initialViewState();
    let seed = 42;
    for (let i = 0; i < 200; i++) {
      seed = (seed * 1103515245 + 12345) % 2147483648;
      const before = stepIndex(state.step);
      state = seed % 2 === 0 ? goNext(state) : goBack(state);
      expect(Math.abs(stepIndex(state.step) - before)).toBeLessThanOrEqual(1);
    }
  });
});

describe("dirty flag", () => {
  it("marks local mutations and clears on confirmation", () => {
    let state = initialViewState();
    state = markDirty(state);
    expect(state.dirty).toBe(true);
    state = markClean(state);
    expect(state.dirty).toBe(false);
    expect(state.error).toBeNull();
  });

  it("keeps the dirty flag when a write fails", () => {
    let state = markDirty(initialViewState());
    state = markFailed(state, "bad polarity");
    expect(state.dirty).toBe(true);
    expect(state.error).toBe("bad polarity");
  });

  it("does not touch the current step", () => {
    const state = markFailed(markDirty({ step: "GroundTruth", dirty: false, error: null }), "x");
    expect(state.step).toBe("GroundTruth");
  });
});
