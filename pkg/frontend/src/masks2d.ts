// 2D tab: draws a frame image with the pre- and post-alignment contours of
// every visible region overlaid.

import { ApiClient } from "./api.js";
import { regionColor } from "./palette.js";

export async function renderFrameOverlay(
  api: ApiClient, frameId: number, canvas: HTMLCanvasElement, align = true,
): Promise<void> {
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    throw new Error("2d canvas context unavailable");
  }
  const image = new Image();
  image.src = api.frameImageUrl(frameId);
  await new Promise((resolve, reject) => {
    image.onload = resolve;
    image.onerror = reject;
  });
  canvas.width = image.width;
  canvas.height = image.height;
  ctx.drawImage(image, 0, 0);

  const doc = await api.frameMasks(frameId, align);
  for (const [regionId, entry] of Object.entries<any>(doc.masks)) {
    const [r, g, b] = regionColor(Number(regionId));
    drawContour(ctx, entry.contour, `rgba(${255 * r},${255 * g},${255 * b},0.9)`, [4, 3]);
    if (entry.aligned) {
      drawContour(ctx, entry.aligned, `rgb(${255 * r},${255 * g},${255 * b})`, []);
    }
  }
}

function drawContour(
  ctx: CanvasRenderingContext2D, points: number[][],
  style: string, dash: number[],
): void {
  if (!points || points.length < 2) {
    return;
  }
  ctx.save();
  ctx.strokeStyle = style;
  ctx.lineWidth = 1.5;
  ctx.setLineDash(dash);
  ctx.beginPath();
  ctx.moveTo(points[0][0], points[0][1]);
  for (const [x, y] of points.slice(1)) {
    ctx.lineTo(x, y);
  }
  ctx.closePath();
  ctx.stroke();
  ctx.restore();
}
