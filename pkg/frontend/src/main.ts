/** Browser entry point: wires the store, API client, and DOM together. */

import { ApiClient } from "./api.js";
import { curvePath, parseCurveSet, renderCurvePanel } from "./curves.js";
import { PreviewUpdater } from "./preview.js";
import { Store } from "./state.js";
import { CURVE_KEYS, CurveKey } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

function previewUrlFromBase64(b64: string): string {
  return `data:image/png;base64,${b64}`;
}

export function mountStudio(root: HTMLElement, api: ApiClient): void {
  const store = new Store();
  const banner = el("div", { class: "error-banner", hidden: "hidden" });
  const preview = el("img", { class: "preview", alt: "preview" });
  const curvePanel = el("div", { class: "curve-panel" });
  const sliderPanel = el("div", { class: "slider-panel" });
  const styleSource = el("select", { class: "style-source" });
  const styleTarget = el("select", { class: "style-target" });
  const fileInput = el("input", { type: "file", accept: "image/png,image/x-portable-pixmap" });
  const enhanceBtn = el("button", {}, "Enhance");
  const exportBtn = el("button", {}, "Export");

  const updater = new PreviewUpdater(
    (req) => {
      const sid = store.get().sessionId;
      if (sid === null) return Promise.reject(new Error("no active session"));
      return api.updateSliders(sid, req.sliders, req.knots);
    },
    {
      onPreview: (blob, req) => {
        const old = store.get().previewUrl;
        if (old !== null && old.startsWith("blob:")) URL.revokeObjectURL(old);
        store.update({
          previewUrl: URL.createObjectURL(blob),
          sliders: req.sliders,
          knotOverrides: req.knots,
          pending: false,
          error: null,
        });
      },
      onError: (error) => {
        // revert the sliders to the last state the server rendered
        store.update({ pending: false, error: String(error) });
        renderSliders();
      },
    },
  );

  function showError(message: string | null): void {
    banner.hidden = message === null;
    banner.textContent = message ?? "";
  }

  function renderCurves(): void {
    curvePanel.replaceChildren();
    const doc = store.get().curves;
    if (doc === null) return;
    for (const [output, plots] of renderCurvePanel(doc)) {
      const group = el("div", { class: `curve-group curve-group-${output}` });
      group.append(el("h3", {}, `${output} output`));
      const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
      svg.setAttribute("viewBox", "0 -1 1 3");
      for (const plot of plots) {
        const path = document.createElementNS("http://www.w3.org/2000/svg", "path");
        path.setAttribute("d", curvePath(plot));
        path.setAttribute("class", `curve curve-${plot.key}`);
        path.setAttribute("fill", "none");
        svg.append(path);
      }
      group.append(svg);
      curvePanel.append(group);
    }
  }

  function renderSliders(): void {
    sliderPanel.replaceChildren();
    const state = store.get();
    for (const key of CURVE_KEYS) {
      const row = el("label", { class: "slider-row" }, key);
      const input = el("input", {
        type: "range",
        min: "0",
        max: "2",
        step: "0.01",
        value: String(state.sliders[key]),
      });
      input.addEventListener("input", () => {
        store.setSlider(key as CurveKey, Number(input.value));
        store.update({ pending: true });
        updater.schedule(store.get().sliders, store.get().knotOverrides);
      });
      row.append(input);
      sliderPanel.append(row);
    }
  }

  async function refreshStyles(): Promise<void> {
    const styles = await api.listStyles();
    store.update({ styles });
    for (const select of [styleSource, styleTarget]) {
      select.replaceChildren(...styles.map((s) => el("option", { value: s.id }, s.id)));
    }
  }

  enhanceBtn.addEventListener("click", () => {
    const file = fileInput.files?.[0];
    if (!file) {
      showError("choose an image first");
      return;
    }
    api
      .enhance(file, styleSource.value, styleTarget.value)
      .then((resp) => {
        store.openSession(resp.session_id, parseCurveSet(resp.curves.json), previewUrlFromBase64(resp.preview_png));
        renderCurves();
        renderSliders();
      })
      .catch((error) => showError(String(error)));
  });

  exportBtn.addEventListener("click", () => {
    const sid = store.get().sessionId;
    if (sid === null) return;
    api
      .exportImage(sid)
      .then((blob) => {
        const link = el("a", { download: "enhanced.png", href: URL.createObjectURL(blob) });
        link.click();
      })
      .catch((error) => showError(String(error)));
  });

  store.subscribe((state) => {
    if (state.previewUrl !== null) preview.src = state.previewUrl;
    showError(state.error);
  });

  root.append(banner, fileInput, styleSource, styleTarget, enhanceBtn, exportBtn, preview, curvePanel, sliderPanel);
  void refreshStyles().catch((error) => showError(String(error)));
}

if (typeof document !== "undefined" && document.getElementById("studio-root")) {
  mountStudio(document.getElementById("studio-root") as HTMLElement, new ApiClient());
}
