/**
 * DOM adapter: photograph panel with the target cross on the left, the
 * six rendered part views in a 2x3 grid on the right. Projections draw
 * solid when the service says the point is visible in that view, hollow
 * otherwise. Clicks are reported in view-image pixel space.
 */

import type { Projection, ServiceClient, TargetTask } from "./api.js";
import type { ClickSource, Display } from "./workbench.js";

const VIEWS = 6;

interface ViewPanel {
  canvas: HTMLCanvasElement;
  image: HTMLImageElement | null;
  resolution: number;
}

export class DomWorkbenchView implements Display, ClickSource {
  private readonly photoCanvas: HTMLCanvasElement;
  private photoImage: HTMLImageElement | null = null;
  private readonly viewPanels: ViewPanel[] = [];
  private readonly progressEl: HTMLElement;
  private readonly warningEl: HTMLElement;
  private readonly bannerEl: HTMLElement;
  private currentPart = 0;
  private target: TargetTask | null = null;
  private projections: Projection[] = [];
  private pendingClick:
    | ((click: { view: number; x: number; y: number }) => void)
    | null = null;
  private busy = false;

  constructor(
    root: HTMLElement,
    private readonly client: ServiceClient,
    photoUrl: string | null,
  ) {
    root.innerHTML = `
      <div class="workbench">
        <div class="photo-pane">
          <canvas id="photo" width="640" height="480"></canvas>
          <div id="progress" class="progress"></div>
          <div id="warning" class="warning" hidden></div>
          <div id="banner" class="banner" hidden>Session complete</div>
        </div>
        <div class="views-grid" id="views"></div>
      </div>`;
    this.photoCanvas = root.querySelector("#photo") as HTMLCanvasElement;
    this.progressEl = root.querySelector("#progress") as HTMLElement;
    this.warningEl = root.querySelector("#warning") as HTMLElement;
    this.bannerEl = root.querySelector("#banner") as HTMLElement;
    const grid = root.querySelector("#views") as HTMLElement;
    for (let v = 0; v < VIEWS; v++) {
      const canvas = document.createElement("canvas");
      canvas.className = "view-canvas";
      canvas.width = 512;
      canvas.height = 512;
      canvas.addEventListener("click", (ev) => this.onViewClick(v, ev));
      grid.appendChild(canvas);
      this.viewPanels.push({ canvas, image: null, resolution: 512 });
    }
    if (photoUrl) {
      const img = new Image();
      img.onload = () => {
        this.photoCanvas.width = img.naturalWidth;
        this.photoCanvas.height = img.naturalHeight;
        this.photoImage = img;
        this.redrawPhoto();
      };
      img.src = photoUrl;
    }
  }

  /** ClickSource: resolves with the next click on any view canvas. */
  nextClick(target: TargetTask): Promise<{ view: number; x: number; y: number }> {
    void this.ensureViews(target.part);
    return new Promise((resolve) => {
      this.pendingClick = resolve;
    });
  }

  private onViewClick(view: number, ev: MouseEvent) {
    if (this.busy || this.pendingClick === null) {
      return; // one in-flight request per session
    }
    const panel = this.viewPanels[view];
    if (!panel) return;
    const rect = panel.canvas.getBoundingClientRect();
    const sx = panel.canvas.width / rect.width;
    const sy = panel.canvas.height / rect.height;
    const x = Math.min(
      panel.canvas.width - 1,
      Math.max(0, Math.floor((ev.clientX - rect.left) * sx)),
    );
    const y = Math.min(
      panel.canvas.height - 1,
      Math.max(0, Math.floor((ev.clientY - rect.top) * sy)),
    );
    const resolve = this.pendingClick;
    this.pendingClick = null;
    this.busy = true;
    resolve({ view, x, y });
    this.busy = false;
  }

  private async ensureViews(part: number): Promise<void> {
    if (part === this.currentPart) return;
    this.currentPart = part;
    await Promise.all(
      this.viewPanels.map(async (panel, v) => {
        const meta = await this.client.viewMeta(part, v);
        panel.resolution = meta.resolution;
        panel.canvas.width = meta.resolution;
        panel.canvas.height = meta.resolution;
        await new Promise<void>((resolve) => {
          const img = new Image();
          img.onload = () => {
            panel.image = img;
            resolve();
          };
          img.onerror = () => resolve();
          img.src = this.client.viewImageUrl(part, v);
        });
        this.redrawView(v);
      }),
    );
  }

  // -- Display -------------------------------------------------------------

  showTargetCross(target: TargetTask | null): void {
    this.target = target;
    if (target) {
      void this.ensureViews(target.part);
    }
    this.redrawPhoto();
  }

  showProjections(projections: Projection[]): void {
    this.projections = projections;
    for (let v = 0; v < VIEWS; v++) {
      this.redrawView(v);
    }
  }

  setProgress(done: number, total: number): void {
    this.progressEl.textContent = `${done} / ${total} points`;
  }

  showCompletion(): void {
    this.bannerEl.hidden = false;
  }

  warnOffSurface(message: string): void {
    this.warningEl.textContent = message;
    this.warningEl.hidden = false;
  }

  clearWarning(): void {
    this.warningEl.hidden = true;
  }

  // -- drawing ----------------------------------------------------------------

  private redrawPhoto(): void {
    const ctx = this.photoCanvas.getContext("2d");
    if (!ctx) return;
    ctx.clearRect(0, 0, this.photoCanvas.width, this.photoCanvas.height);
    if (this.photoImage) {
      ctx.drawImage(this.photoImage, 0, 0);
    }
    if (this.target) {
      const { x, y } = this.target;
      ctx.strokeStyle = "#e00";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.moveTo(x - 8, y);
      ctx.lineTo(x + 8, y);
      ctx.moveTo(x, y - 8);
      ctx.lineTo(x, y + 8);
      ctx.stroke();
    }
  }

  private redrawView(view: number): void {
    const panel = this.viewPanels[view];
    if (!panel) return;
    const ctx = panel.canvas.getContext("2d");
    if (!ctx) return;
    ctx.clearRect(0, 0, panel.canvas.width, panel.canvas.height);
    if (panel.image) {
      ctx.drawImage(panel.image, 0, 0);
    }
    const proj = this.projections.find((p) => p.view === view);
    if (!proj) return;
    ctx.lineWidth = 2;
    ctx.strokeStyle = "#2e7";
    ctx.fillStyle = "#2e7";
    ctx.beginPath();
    ctx.arc(proj.x, proj.y, 6, 0, 2 * Math.PI);
    if (proj.visible) {
      ctx.fill(); // visible: solid
    } else {
      ctx.stroke(); // occluded: hollow
    }
  }
}
