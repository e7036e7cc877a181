/** Step views as plain HTML strings.  Interactive elements carry
 * data-action attributes; the page entry point wires one delegated
 * listener for all of them.
 */

import type { CandidateRow, CaseRow, Report } from "./api.js";
import type { WizardMirror } from "./controller.js";
import { escapeHtml } from "./html.js";
import { STEPS, stepIndex, type WizardViewState } from "./state.js";

const STEP_TITLES: Record<string, string> = {
  Cases: "Case identification",
  SourcesSinks: "Source and sink identification",
  GroundTruth: "Ground truth identification",
  Results: "Results",
};

export function renderHeader(view: WizardViewState): string {
  const crumbs = STEPS.map((step, i) => {
    const cls =
      step === view.step ? "crumb current" : i < stepIndex(view.step) ? "crumb done" : "crumb";
    return `<span class="${cls}">${i + 1}. ${STEP_TITLES[step]}</span>`;
  }).join(" ");
  const dirty = view.dirty ? '<span class="dirty" title="unsaved changes">&#9679;</span>' : "";
  return `<header><nav class="steps">${crumbs}</nav>${dirty}</header>`;
}

export function renderError(view: WizardViewState): string {
  if (!view.error) return "";
  return `<div class="error-banner" role="alert">${escapeHtml(view.error)}</div>`;
}

export function renderNav(view: WizardViewState): string {
  const backDisabled = stepIndex(view.step) === 0 ? " disabled" : "";
  const nextDisabled = stepIndex(view.step) === STEPS.length - 1 ? " disabled" : "";
  return (
    `<footer class="nav">` +
    `<button data-action="back"${backDisabled}>&#8592; Back</button>` +
    `<button data-action="next"${nextDisabled}>Next &#8594;</button>` +
    `</footer>`
  );
}

// --- step 1: cases -------------------------------------------------------

export function renderCasesStep(mirror: WizardMirror): string {
  const rows = mirror.apps
    .map(
      (app) =>
        `<tr><td>${escapeHtml(app.id)}</td><td>${escapeHtml(app.file)}</td>` +
        `<td>${app.classes}</td><td>${app.statements}</td></tr>`,
    )
    .join("");
  const table = mirror.apps.length
    ? `<table><thead><tr><th>id</th><th>file</th><th>classes</th>` +
      `<th>statements</th></tr></thead><tbody>${rows}</tbody></table>`
    : `<p class="empty">No apps loaded yet.</p>`;
  return (
    `<section class="step-cases">` +
    `<h2>Apps</h2>${table}` +
    `<label class="upload">Add sidecar ` +
    `<input type="file" data-action="upload-app" accept=".xml,.json"/></label>` +
    `<button data-action="init-cases">Create one case per app</button>` +
    `</section>`
  );
}

// --- step 2: sources and sinks -------------------------------------------

function candidateRow(candidate: CandidateRow): string {
  const checked = candidate.selected ? " checked" : "";
  const badge = candidate.selected
    ? '<span class="badge preselected">preselected</span>'
    : "";
  const group = candidate.group
    ? `<span class="chip">${escapeHtml(candidate.group)}</span>`
    : "";
  return (
    `<li class="candidate ${candidate.kind}">` +
    `<input type="checkbox" data-action="toggle-candidate" ` +
    `data-id="${candidate.id}"${checked}/>` +
    `<input type="checkbox" class="group-pick" data-id="${candidate.id}"/>` +
    `<span class="kind">${candidate.kind}</span> ` +
    `<code>${escapeHtml(candidate.statement)}</code> ` +
    `<small>${escapeHtml(candidate.classname)}.${escapeHtml(candidate.method)}</small>` +
    `${badge}${group}</li>`
  );
}

export function renderSourcesSinksStep(mirror: WizardMirror): string {
  const susiLoaded = mirror.session?.susi_loaded ?? false;
  const susi =
    `<label class="upload">Source/sink list ` +
    `<input type="file" data-action="upload-susi"/></label>` +
    (susiLoaded ? '<span class="badge">list loaded</span>' : "");
  if (!susiLoaded) {
    return `<section class="step-sources">` + `<h2>Sources and sinks</h2>${susi}` + `</section>`;
  }
  const items = mirror.candidates.map(candidateRow).join("");
  const list = mirror.candidates.length
    ? `<ul class="candidates">${items}</ul>`
    : `<p class="empty">No candidates: the list matched nothing.</p>`;
  return (
    `<section class="step-sources">` +
    `<h2>Sources and sinks</h2>${susi}` +
    `<div class="bulk">` +
    `<button data-action="bulk-on">Select all</button>` +
    `<button data-action="bulk-off">Deselect all</button>` +
    `<input type="text" data-role="group-label" placeholder="group label"/>` +
    `<button data-action="group">Group checked</button>` +
    `</div>${list}</section>`
  );
}

// --- step 3: ground truth ------------------------------------------------

function caseRow(row: CaseRow): string {
  const negative = row.polarity === "negative" ? " selected" : "";
  const positive = row.polarity === "positive" ? " selected" : "";
  const checked = row.active ? " checked" : "";
  const query = row.query ? `<code class="query">${escapeHtml(row.query)}</code>` : "";
  return (
    `<tr class="${row.active ? "" : "inactive"}">` +
    `<td>${escapeHtml(row.id)}</td>` +
    `<td><select data-action="set-polarity" data-id="${escapeHtml(row.id)}">` +
    `<option value="positive"${positive}>positive</option>` +
    `<option value="negative"${negative}>negative</option></select></td>` +
    `<td><input type="checkbox" data-action="set-active" ` +
    `data-id="${escapeHtml(row.id)}"${checked}/></td>` +
    `<td>${query}</td></tr>`
  );
}

export function renderGroundTruthStep(mirror: WizardMirror): string {
  const rows = mirror.cases.map(caseRow).join("");
  const table = mirror.cases.length
    ? `<table><thead><tr><th>case</th><th>polarity</th><th>active</th>` +
      `<th>query</th></tr></thead><tbody>${rows}</tbody></table>`
    : `<p class="empty">No cases yet.</p>`;
  return (
    `<section class="step-truth">` +
    `<h2>Ground truth</h2>` +
    `<button data-action="pair-cases">Generate source&#215;sink cases</button>` +
    `${table}</section>`
  );
}

// --- step 4: results -----------------------------------------------------

/** Metric values exactly as the report payload carries them.  The UI
 * must not round, recompute or otherwise touch these numbers.
 */
export function displayedMetrics(report: Report): Record<string, string> {
  return {
    cases: String(report.counts.cases),
    tp: String(report.counts.tp),
    fp: String(report.counts.fp),
    tn: String(report.counts.tn),
    fn: String(report.counts.fn),
    precision: String(report.metrics.precision),
    recall: String(report.metrics.recall),
    f_measure: String(report.metrics.f_measure),
  };
}

export function renderResultsStep(mirror: WizardMirror): string {
  const runButton = `<button data-action="run">Run benchmark</button>`;
  if (!mirror.report) {
    return (
      `<section class="step-results"><h2>Results</h2>${runButton}` +
      `<p class="empty">No report yet.</p></section>`
    );
  }
  const metrics = displayedMetrics(mirror.report);
  const cells = Object.entries(metrics)
    .map(([name, value]) => `<tr><th>${name}</th><td class="metric-${name}">${value}</td></tr>`)
    .join("");
  const verdictRows = mirror.report.verdicts
    .map(
      (v) =>
        `<tr><td>${escapeHtml(v.case_id)}</td><td>${v.classification}</td>` +
        `<td>${v.degraded ? "yes" : "no"}</td>` +
        `<td>${v.run ? escapeHtml(v.run.tool) : ""}</td>` +
        `<td><button data-action="show-graph" data-id="${escapeHtml(v.case_id)}">` +
        `graph</button></td></tr>`,
    )
    .join("");
  const exports = (["json", "csv", "sql"] as const)
    .map((fmt) => `<a href="/export?format=${fmt}" download>${fmt}</a>`)
    .join(" ");
  return (
    `<section class="step-results"><h2>Results</h2>${runButton}` +
    `<table class="metrics"><tbody>${cells}</tbody></table>` +
    `<table class="verdicts"><thead><tr><th>case</th><th>verdict</th>` +
    `<th>degraded</th><th>tool</th><th></th></tr></thead>` +
    `<tbody>${verdictRows}</tbody></table>` +
    `<p class="exports">Export: ${exports} ` +
    `<a href="/benchmark" download>benchmark.xml</a></p>` +
    `<div id="graph-pane"></div></section>`
  );
}

export function renderStep(mirror: WizardMirror, view: WizardViewState): string {
  switch (view.step) {
    case "Cases":
      return renderCasesStep(mirror);
    case "SourcesSinks":
      return renderSourcesSinksStep(mirror);
    case "GroundTruth":
      return renderGroundTruthStep(mirror);
    case "Results":
      return renderResultsStep(mirror);
  }
}

export function renderPage(mirror: WizardMirror, view: WizardViewState): string {
  return renderHeader(view) + renderError(view) + renderStep(mirror, view) + renderNav(view);
}
