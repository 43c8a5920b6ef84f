import { HttpServiceClient } from "./api.js";
import { DomWorkbenchView } from "./dom.js";
import { Workbench } from "./workbench.js";

function param(name: string): string | null {
  return new URLSearchParams(window.location.search).get(name);
}

window.addEventListener("load", () => {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  const sessionId = param("session");
  const api = param("api") ?? "";
  if (!sessionId) {
    root.textContent =
      "Pass ?session=<session-id>[&api=<service-base>][&photo=<image-url>]";
    return;
  }
  const client = new HttpServiceClient(api);
  const view = new DomWorkbenchView(root, client, param("photo"));
  const workbench = new Workbench(client, view, sessionId);
  workbench
    .runAnnotationLoop(view)
    .catch((err) => {
      const warning = document.getElementById("warning");
      if (warning) {
        warning.textContent = `Session failed: ${err}`;
        warning.removeAttribute("hidden");
      }
    });
});
