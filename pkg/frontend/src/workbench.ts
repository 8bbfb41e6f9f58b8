/** Workbench page: pickers, result pane, guidance canvas, jobs.
 *
 * Pure DOM, no framework. All model work happens server-side through the
 * typed client; this file only moves images and state around. The guidance
 * canvas always matches the style image's pixel size, so exported masks line
 * up with what the model sees.
 */

import { ApiError, TextfxClient } from "./api.js";
import type { JobRecord, WeightedStyle } from "./api.js";
import {
  DEBOUNCE_MS,
  InterpolationPanelState,
  MAX_SLOTS,
  commit,
  debounce,
  emptyPanel,
  setWeight,
} from "./interpolation.js";
import { MaskCanvasState, Stroke, StrokeLabel, planesToRGB, rasterizeStrokes } from "./mask.js";
import { pollJob } from "./jobs.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function section(title: string): HTMLElement {
  const box = el("section", { class: "panel" });
  box.appendChild(el("h2", {}, title));
  return box;
}

async function fileToB64(file: File): Promise<string> {
  const url = await new Promise<string>((resolve, reject) => {
    const reader = new FileReader();
    reader.onload = () => resolve(reader.result as string);
    reader.onerror = () => reject(reader.error);
    reader.readAsDataURL(file);
  });
  return url.slice(url.indexOf(",") + 1);
}

function b64Src(b64: string): string {
  return `data:image/png;base64,${b64}`;
}

class Workbench {
  private client: TextfxClient;
  private glyphB64: string | null = null;
  private styleB64: string | null = null;
  private panel: InterpolationPanelState = emptyPanel();
  private maskState: MaskCanvasState = { width: 0, height: 0, strokes: [] };
  private brush: StrokeLabel = "foreground";
  private brushRadius = 4;
  private activeStroke: Stroke | null = null;

  private resultImg = el("img", { class: "result", alt: "result" });
  private statusLine = el("p", { class: "status" }, "ready");
  private jobLine = el("p", { class: "status" }, "no job");
  private checkpointList = el("ul", { class: "checkpoints" });
  private maskCanvas = el("canvas", { class: "mask-canvas" });
  private styleImg = el("img", { class: "preview", alt: "style" });
  private glyphImg = el("img", { class: "preview", alt: "glyph" });
  private slotInputs: Array<{ slider: HTMLInputElement; label: HTMLSpanElement }> = [];
  private liveInterpolate = debounce(() => void this.runInterpolate(), DEBOUNCE_MS);

  constructor(root: HTMLElement, baseUrl: string) {
    this.client = new TextfxClient(baseUrl);
    root.appendChild(this.buildConnection(baseUrl));
    root.appendChild(this.buildInputs());
    root.appendChild(this.buildActions());
    root.appendChild(this.buildInterpolation());
    root.appendChild(this.buildMask());
    root.appendChild(this.buildFinetune());
    root.appendChild(this.buildResult());
    void this.refreshCheckpoints();
  }

  private setStatus(text: string): void {
    this.statusLine.textContent = text;
  }

  private report(err: unknown): void {
    if (err instanceof ApiError) {
      this.setStatus(`${err.code}: ${err.message}`);
    } else {
      this.setStatus(String(err));
    }
  }

  private buildConnection(baseUrl: string): HTMLElement {
    const box = section("Service");
    const input = el("input", { type: "text", value: baseUrl, size: "40" });
    input.addEventListener("change", () => {
      this.client = new TextfxClient(input.value.replace(/\/$/, ""));
      void this.refreshCheckpoints();
    });
    const refresh = el("button", {}, "refresh checkpoints");
    refresh.addEventListener("click", () => void this.refreshCheckpoints());
    box.append(input, refresh, this.checkpointList, this.statusLine);
    return box;
  }

  private async refreshCheckpoints(): Promise<void> {
    try {
      const rows = await this.client.checkpoints();
      this.checkpointList.replaceChildren(
        ...rows.map((row) =>
          el("li", {}, `${row.id}${row.active ? " (active)" : ""}`),
        ),
      );
      this.setStatus(`${rows.length} checkpoint(s)`);
    } catch (err) {
      this.report(err);
    }
  }

  private buildInputs(): HTMLElement {
    const box = section("Images");
    const glyphPick = el("input", { type: "file", accept: "image/png" });
    glyphPick.addEventListener("change", async () => {
      const file = glyphPick.files?.[0];
      if (!file) return;
      this.glyphB64 = await fileToB64(file);
      this.glyphImg.src = b64Src(this.glyphB64);
    });
    const stylePick = el("input", { type: "file", accept: "image/png" });
    stylePick.addEventListener("change", async () => {
      const file = stylePick.files?.[0];
      if (!file) return;
      this.styleB64 = await fileToB64(file);
      this.styleImg.src = b64Src(this.styleB64);
      this.styleImg.onload = () => this.resetMaskCanvas();
    });
    box.append(
      el("label", {}, "glyph (3-plane PNG): "),
      glyphPick,
      this.glyphImg,
      el("label", {}, "style reference: "),
      stylePick,
      this.styleImg,
    );
    return box;
  }

  private buildActions(): HTMLElement {
    const box = section("Transfer");
    const stylizeBtn = el("button", {}, "stylize");
    stylizeBtn.addEventListener("click", async () => {
      if (!this.glyphB64 || !this.styleB64) {
        this.setStatus("load a glyph and a style image first");
        return;
      }
      try {
        const out = await this.client.stylize(this.glyphB64, this.styleB64);
        this.showResult(out.image, `stylized with ${out.checkpoint}`);
      } catch (err) {
        this.report(err);
      }
    });
    const destylizeBtn = el("button", {}, "destylize");
    destylizeBtn.addEventListener("click", async () => {
      if (!this.styleB64) {
        this.setStatus("load a style image first");
        return;
      }
      try {
        const out = await this.client.destylize(this.styleB64);
        this.showResult(out.image, `destylized with ${out.checkpoint}`);
      } catch (err) {
        this.report(err);
      }
    });
    box.append(stylizeBtn, destylizeBtn);
    return box;
  }

  private buildInterpolation(): HTMLElement {
    const box = section("Style interpolation");
    for (let i = 0; i < MAX_SLOTS; i++) {
      const row = el("div", { class: "slot" });
      const pick = el("input", { type: "file", accept: "image/png" });
      const slider = el("input", {
        type: "range",
        min: "0",
        max: "100",
        value: "100",
        disabled: "true",
      });
      const label = el("span", {}, "");
      pick.addEventListener("change", async () => {
        const file = pick.files?.[0];
        if (!file) return;
        const b64 = await fileToB64(file);
        while (this.panel.slots.length <= i) {
          this.panel = { slots: [...this.panel.slots, { image: "", weight: 0 }] };
        }
        this.panel.slots[i] = { image: b64, weight: Number(slider.value) / 100 };
        slider.removeAttribute("disabled");
        this.updateWeightLabels();
        this.liveInterpolate();
      });
      slider.addEventListener("input", () => {
        if (!this.panel.slots[i]?.image) return;
        this.panel = setWeight(this.panel, i, Number(slider.value) / 100);
        this.updateWeightLabels();
        this.liveInterpolate();
      });
      this.slotInputs.push({ slider, label });
      row.append(pick, slider, label);
      box.appendChild(row);
    }
    return box;
  }

  private committedStyles(): WeightedStyle[] {
    const loaded = { slots: this.panel.slots.filter((slot) => slot.image !== "") };
    return commit(loaded);
  }

  private updateWeightLabels(): void {
    let committed: WeightedStyle[] = [];
    try {
      committed = this.committedStyles();
    } catch {
      committed = [];
    }
    let at = 0;
    this.panel.slots.forEach((slot, i) => {
      const ui = this.slotInputs[i];
      if (!ui) return;
      if (slot.image === "") {
        ui.label.textContent = "";
        return;
      }
      const share = committed[at]?.weight ?? 0;
      at += 1;
      ui.label.textContent = share.toFixed(3);
    });
  }

  private async runInterpolate(): Promise<void> {
    if (!this.glyphB64) {
      this.setStatus("load a glyph image to interpolate");
      return;
    }
    let styles: WeightedStyle[];
    try {
      styles = this.committedStyles();
    } catch (err) {
      this.setStatus(String(err));
      return;
    }
    try {
      const out = await this.client.interpolate(this.glyphB64, styles);
      this.showResult(out.image, `interpolated ${styles.length} style(s)`);
    } catch (err) {
      this.report(err);
    }
  }

  private resetMaskCanvas(): void {
    const width = this.styleImg.naturalWidth;
    const height = this.styleImg.naturalHeight;
    this.maskState = { width, height, strokes: [] };
    this.maskCanvas.width = width;
    this.maskCanvas.height = height;
    this.redrawMask();
  }

  private canvasPoint(event: MouseEvent): { x: number; y: number } {
    const rect = this.maskCanvas.getBoundingClientRect();
    return {
      x: ((event.clientX - rect.left) / rect.width) * this.maskCanvas.width,
      y: ((event.clientY - rect.top) / rect.height) * this.maskCanvas.height,
    };
  }

  private redrawMask(): void {
    const ctx = this.maskCanvas.getContext("2d");
    if (!ctx) return;
    ctx.clearRect(0, 0, this.maskCanvas.width, this.maskCanvas.height);
    if (this.styleImg.naturalWidth > 0) {
      ctx.globalAlpha = 0.6;
      ctx.drawImage(this.styleImg, 0, 0);
      ctx.globalAlpha = 1.0;
    }
    const planes = rasterizeStrokes(this.maskState);
    if (!planes) return;
    const overlay = ctx.createImageData(planes.width, planes.height);
    for (let i = 0; i < planes.fg.length; i++) {
      if (planes.fg[i]) {
        overlay.data[i * 4] = 255;
        overlay.data[i * 4 + 3] = 140;
      } else if (planes.bg[i]) {
        overlay.data[i * 4 + 2] = 255;
        overlay.data[i * 4 + 3] = 140;
      }
    }
    void createImageBitmap(overlay).then((bitmap) => ctx.drawImage(bitmap, 0, 0));
  }

  private buildMask(): HTMLElement {
    const box = section("Guidance strokes");
    const fgBtn = el("button", {}, "glyph brush (red)");
    const bgBtn = el("button", {}, "background brush (blue)");
    fgBtn.addEventListener("click", () => (this.brush = "foreground"));
    bgBtn.addEventListener("click", () => (this.brush = "background"));
    const radius = el("input", { type: "number", min: "1", max: "32", value: "4" });
    radius.addEventListener("change", () => {
      this.brushRadius = Number(radius.value);
    });
    const clear = el("button", {}, "clear strokes");
    clear.addEventListener("click", () => {
      this.maskState = { ...this.maskState, strokes: [] };
      this.redrawMask();
    });
    this.maskCanvas.addEventListener("mousedown", (event) => {
      if (this.maskState.width === 0) return;
      this.activeStroke = {
        points: [this.canvasPoint(event)],
        radius: this.brushRadius,
        label: this.brush,
      };
      this.maskState = {
        ...this.maskState,
        strokes: [...this.maskState.strokes, this.activeStroke],
      };
      this.redrawMask();
    });
    this.maskCanvas.addEventListener("mousemove", (event) => {
      if (!this.activeStroke) return;
      this.activeStroke.points.push(this.canvasPoint(event));
      this.redrawMask();
    });
    const finish = () => {
      this.activeStroke = null;
    };
    this.maskCanvas.addEventListener("mouseup", finish);
    this.maskCanvas.addEventListener("mouseleave", finish);
    box.append(fgBtn, bgBtn, el("label", {}, " brush radius: "), radius, clear, this.maskCanvas);
    return box;
  }

  private maskB64(): string | null {
    const planes = rasterizeStrokes(this.maskState);
    if (!planes) return null;
    const rgb = planesToRGB(planes);
    const canvas = document.createElement("canvas");
    canvas.width = planes.width;
    canvas.height = planes.height;
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("2d canvas unavailable");
    const data = ctx.createImageData(planes.width, planes.height);
    for (let i = 0; i < planes.width * planes.height; i++) {
      data.data[i * 4] = rgb[i * 3]!;
      data.data[i * 4 + 1] = rgb[i * 3 + 1]!;
      data.data[i * 4 + 2] = rgb[i * 3 + 2]!;
      data.data[i * 4 + 3] = 255;
    }
    ctx.putImageData(data, 0, 0);
    const url = canvas.toDataURL("image/png");
    return url.slice(url.indexOf(",") + 1);
  }

  private buildFinetune(): HTMLElement {
    const box = section("Finetune");
    const iterations = el("input", { type: "number", min: "1", max: "5000", value: "300" });
    const supervised = el("input", { type: "checkbox" });
    const submit = el("button", {}, "submit finetune job");
    submit.addEventListener("click", async () => {
      if (!this.styleB64) {
        this.setStatus("load a style image first");
        return;
      }
      try {
        const mask = supervised.checked ? undefined : (this.maskB64() ?? undefined);
        const accepted = await this.client.finetune({
          styleImage: this.styleB64,
          glyphImage: supervised.checked ? (this.glyphB64 ?? undefined) : undefined,
          mask,
          iterations: Number(iterations.value),
        });
        this.jobLine.textContent = `job ${accepted.job_id}: ${accepted.status}`;
        const record = await pollJob(this.client, accepted.job_id, {
          onUpdate: (r: JobRecord) => {
            this.jobLine.textContent = `job ${r.job_id}: ${r.status} (${r.iterations} iterations)`;
          },
        });
        this.jobLine.textContent = `job ${record.job_id}: done -> ${record.result_checkpoint}`;
        await this.refreshCheckpoints();
      } catch (err) {
        this.report(err);
      }
    });
    box.append(
      el("label", {}, "iterations: "),
      iterations,
      el("label", {}, " paired glyph (supervised): "),
      supervised,
      submit,
      this.jobLine,
    );
    return box;
  }

  private buildResult(): HTMLElement {
    const box = section("Result");
    box.appendChild(this.resultImg);
    return box;
  }

  private showResult(b64: string, note: string): void {
    this.resultImg.src = b64Src(b64);
    this.setStatus(note);
  }
}

const root = document.getElementById("app");
if (root) {
  const defaultBase = (window as { TEXTFX_API?: string }).TEXTFX_API ?? "http://127.0.0.1:8000";
  new Workbench(root, defaultBase);
}
