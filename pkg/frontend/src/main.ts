/** Browser entry point: render into #app and translate DOM events into
 * controller calls.  State lives on the server; this file only wires.
 */

import { ApiClient } from "./api.js";
import { Wizard } from "./controller.js";
import { renderGraphSvg } from "./graph.js";
import { renderPage } from "./views.js";

function readFile(input: HTMLInputElement): Promise<string | null> {
  const file = input.files?.[0];
  if (!file) return Promise.resolve(null);
  return file.text();
}

export function mount(root: HTMLElement, wizard: Wizard): void {
  const redraw = () => {
    root.innerHTML = renderPage(wizard.mirror, wizard.view);
  };

  const checkedGroupIds = (): string[] =>
    Array.from(root.querySelectorAll<HTMLInputElement>(".group-pick:checked")).map(
      (el) => el.dataset.id ?? "",
    );

  root.addEventListener("click", async (event) => {
    const target = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
    if (!target) return;
    const action = target.dataset.action;
    const id = target.dataset.id ?? "";
    switch (action) {
      case "next":
        wizard.next();
        break;
      case "back":
        wizard.back();
        break;
      case "bulk-on":
        await wizard.bulkSelect(true);
        break;
      case "bulk-off":
        await wizard.bulkSelect(false);
        break;
      case "group": {
        const label = root.querySelector<HTMLInputElement>('[data-role="group-label"]');
        await wizard.addGroup(label?.value.trim() ?? "", checkedGroupIds());
        break;
      }
      case "init-cases":
        await wizard.initCases();
        break;
      case "pair-cases":
        await wizard.pairCases();
        break;
      case "run":
        await wizard.run();
        break;
      case "show-graph": {
        const doc = await wizard.graph(id);
        const pane = root.querySelector("#graph-pane");
        if (pane) pane.innerHTML = renderGraphSvg(doc);
        return; // keep the rest of the page untouched
      }
      default:
        return;
    }
    redraw();
  });

  root.addEventListener("change", async (event) => {
    const target = event.target as HTMLInputElement | HTMLSelectElement;
    const action = target.dataset.action;
    const id = target.dataset.id ?? "";
    switch (action) {
      case "toggle-candidate":
        await wizard.toggleCandidate(id, (target as HTMLInputElement).checked);
        break;
      case "set-polarity":
        await wizard.setPolarity(id, target.value as "positive" | "negative");
        break;
      case "set-active":
        await wizard.setActive(id, (target as HTMLInputElement).checked);
        break;
      case "upload-app": {
        const text = await readFile(target as HTMLInputElement);
        if (text !== null) await wizard.addApp(text);
        break;
      }
      case "upload-susi": {
        const text = await readFile(target as HTMLInputElement);
        if (text !== null) await wizard.setSusi(text);
        break;
      }
      default:
        return;
    }
    redraw();
  });

  wizard.refresh().then(redraw, redraw);
}

// Only boot in a real page; tests import the modules directly.
if (typeof document !== "undefined") {
  const root = document.getElementById("app");
  if (root) mount(root, new Wizard(new ApiClient("")));
}
