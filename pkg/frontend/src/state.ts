/** Wizard view state: which step is shown and whether local edits are
 * still in flight.  The server session is the source of truth for
 * everything else; this module only tracks presentation state.
 */

export const STEPS = ["Cases", "SourcesSinks", "GroundTruth", "Results"] as const;

export type WizardStep = (typeof STEPS)[number];

export interface WizardViewState {
  step: WizardStep;
  dirty: boolean;
  error: string | null;
}

export function initialViewState(): WizardViewState {
  return { step: "Cases", dirty: false, error: null };
}

export function stepIndex(step: WizardStep): number {
  return STEPS.indexOf(step);
}

export function canGoNext(state: WizardViewState): boolean {
  return stepIndex(state.step) < STEPS.length - 1;
}

export function canGoBack(state: WizardViewState): boolean {
  return stepIndex(state.step) > 0;
}

// Transitions move by exactly one step; anything else is a no-op so a
// stray event can never skip a stage.
export function goNext(state: WizardViewState): WizardViewState {
  if (!canGoNext(state)) return state;
  return { ...state, step: STEPS[stepIndex(state.step) + 1] };
}

export function goBack(state: WizardViewState): WizardViewState {
  if (!canGoBack(state)) return state;
  return { ...state, step: STEPS[stepIndex(state.step) - 1] };
}

/** A local mutation started: remember it is not on the server yet. */
export function markDirty(state: WizardViewState): WizardViewState {
  return { ...state, dirty: true };
}

/** The server confirmed the mutation and the mirror was refreshed. */
export function markClean(state: WizardViewState): WizardViewState {
  return { ...state, dirty: false, error: null };
}

/** Keep the dirty flag: the edit is still local-only after a failure. */
export function markFailed(state: WizardViewState, message: string): WizardViewState {
  return { ...state, error: message };
}
