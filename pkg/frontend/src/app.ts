// Browser entry point: wires the viewer, state, controller, and the small
// amount of DOM the tool needs (toolbar, label box, candidate list, banner).

import { ApiClient } from "./api.js";
import { Controller } from "./controller.js";
import { ViewState } from "./state.js";
import { Viewer } from "./viewer.js";
import { renderFrameOverlay } from "./masks2d.js";
import type { Tool } from "./types.js";

export async function startApp(root: HTMLElement, baseUrl = ""): Promise<Controller> {
  const api = new ApiClient(baseUrl);
  const state = new ViewState();

  const banner = document.createElement("div");
  banner.className = "banner";
  const toolbar = document.createElement("div");
  toolbar.className = "toolbar";
  const viewport = document.createElement("div");
  viewport.className = "viewport";
  root.append(banner, toolbar, viewport);

  const viewer = new Viewer(viewport);
  const controller = new Controller(api, state, viewer);

  const tools: Tool[] = ["merge", "extract", "split", "annotate", "template", "guided-merge"];
  for (const tool of tools) {
    const button = document.createElement("button");
    button.textContent = tool;
    button.onclick = () => state.setTool(tool);
    toolbar.appendChild(button);
  }

  const labelBox = document.createElement("input");
  labelBox.placeholder = "label";
  labelBox.oninput = () => {
    state.labelDraft = labelBox.value;
  };
  labelBox.onkeydown = async (e) => {
    if (e.key === "Enter") {
      await controller.annotateSelected();
      labelBox.value = state.labelDraft;
      refreshBanner();
    }
  };
  const undoButton = document.createElement("button");
  undoButton.textContent = "undo";
  undoButton.onclick = async () => {
    await controller.undo();
    refreshBanner();
  };
  const tab2d = document.createElement("canvas");
  tab2d.className = "frame-overlay";
  toolbar.append(labelBox, undoButton);
  root.appendChild(tab2d);

  viewer.onStroke = async (polyline, camera) => {
    if (state.offline) {
      return;
    }
    if (state.tool === "merge") {
      await controller.strokeMerge(polyline, camera);
    } else if (state.tool === "split" && state.selectedRegions.length === 1) {
      await controller.strokeSplit(state.selectedRegions[0], polyline, camera);
    } else {
      const hit = await api.stroke(polyline, camera);
      if (hit.regions.length) {
        state.selectRegion(hit.regions[0], state.tool === "template");
      }
    }
    refreshBanner();
  };

  function refreshBanner(): void {
    banner.textContent = state.offline
      ? "offline: read-only"
      : `rev ${state.revision}${state.notice ? " - " + state.notice : ""}`;
    banner.classList.toggle("offline", state.offline);
  }

  await controller.bootstrap();
  viewer.loadMesh(await api.mesh());
  refreshBanner();

  // expose the 2D tab renderer for the frame selector
  (controller as any).show2d = (frameId: number) =>
    renderFrameOverlay(api, frameId, tab2d, true);
  return controller;
}
