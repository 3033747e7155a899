// three.js mesh view: renders the scene colored by region id, exposes the
// camera as the pinhole spec the service expects, and captures strokes as
// screen-space polylines. Picking happens server-side; the viewer only
// collects pixels.

import * as THREE from "three";
import { colorizeByRegion } from "./palette.js";
import type { CameraSpec, MeshPayload } from "./types.js";
import type { MeshView } from "./controller.js";

export class Viewer implements MeshView {
  renderer: THREE.WebGLRenderer;
  scene: THREE.Scene;
  camera: THREE.PerspectiveCamera;
  container: HTMLElement;
  geometry: THREE.BufferGeometry | null = null;
  private orbit = { theta: 0.8, phi: 1.0, radius: 6, target: new THREE.Vector3() };
  private dragging = false;
  private stroking = false;
  private strokePoints: number[][] = [];
  onStroke: ((polyline: number[][], camera: CameraSpec) => void) | null = null;

  constructor(container: HTMLElement) {
    this.container = container;
    this.renderer = new THREE.WebGLRenderer({ antialias: true });
    this.renderer.setSize(container.clientWidth, container.clientHeight);
    this.renderer.setClearColor(0x18181f);
    container.appendChild(this.renderer.domElement);

    this.scene = new THREE.Scene();
    const aspect = container.clientWidth / Math.max(container.clientHeight, 1);
    this.camera = new THREE.PerspectiveCamera(50, aspect, 0.01, 100);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.75));
    const sun = new THREE.DirectionalLight(0xffffff, 1.2);
    sun.position.set(3, 6, 2);
    this.scene.add(sun);

    const canvas = this.renderer.domElement;
    canvas.addEventListener("pointerdown", (e) => this.pointerDown(e));
    canvas.addEventListener("pointermove", (e) => this.pointerMove(e));
    canvas.addEventListener("pointerup", (e) => this.pointerUp(e));
    canvas.addEventListener("wheel", (e) => {
      e.preventDefault();
      this.orbit.radius *= Math.exp(e.deltaY * 0.001);
      this.updateCamera();
    });
    this.updateCamera();
    this.renderLoop();
  }

  loadMesh(payload: MeshPayload): void {
    if (this.geometry) {
      this.geometry.dispose();
    }
    const geometry = new THREE.BufferGeometry();
    geometry.setAttribute("position", new THREE.BufferAttribute(payload.positions, 3));
    geometry.setIndex(new THREE.BufferAttribute(payload.faces, 1));
    geometry.setAttribute(
      "color", new THREE.BufferAttribute(colorizeByRegion(payload.regionIds), 3),
    );
    geometry.computeVertexNormals();
    geometry.computeBoundingSphere();
    const material = new THREE.MeshLambertMaterial({
      vertexColors: true, side: THREE.DoubleSide,
    });
    this.scene.add(new THREE.Mesh(geometry, material));
    this.geometry = geometry;
    const sphere = geometry.boundingSphere;
    if (sphere) {
      this.orbit.target.copy(sphere.center);
      this.orbit.radius = sphere.radius * 2.5;
    }
    this.updateCamera();
  }

  setRegionIds(regionIds: Uint32Array): void {
    if (!this.geometry) {
      return;
    }
    this.geometry.setAttribute(
      "color", new THREE.BufferAttribute(colorizeByRegion(regionIds), 3),
    );
    (this.geometry.getAttribute("color") as THREE.BufferAttribute).needsUpdate = true;
  }

  /** Pinhole camera spec matching the current render view. */
  cameraSpec(): CameraSpec {
    const width = this.renderer.domElement.width;
    const height = this.renderer.domElement.height;
    const fy = height / (2 * Math.tan((this.camera.fov * Math.PI) / 360));
    this.camera.updateMatrixWorld();
    const m = this.camera.matrixWorld.elements; // column-major camera-to-world
    // three cameras look down -z with +y up; the service pinhole looks down
    // +z with +y down, so flip the y and z basis columns
    const pose = [
      m[0], -m[4], -m[8], m[12],
      m[1], -m[5], -m[9], m[13],
      m[2], -m[6], -m[10], m[14],
      0, 0, 0, 1,
    ];
    return { fx: fy, fy, cx: width / 2, cy: height / 2, pose, width, height };
  }

  beginStroke(): void {
    this.stroking = true;
    this.strokePoints = [];
  }

  private pointerDown(e: PointerEvent): void {
    if (e.shiftKey || this.stroking) {
      this.stroking = true;
      this.strokePoints = [this.eventPixel(e)];
    } else {
      this.dragging = true;
    }
  }

  private pointerMove(e: PointerEvent): void {
    if (this.stroking && e.buttons) {
      this.strokePoints.push(this.eventPixel(e));
    } else if (this.dragging && e.buttons) {
      this.orbit.theta -= e.movementX * 0.005;
      this.orbit.phi = Math.min(
        Math.max(this.orbit.phi - e.movementY * 0.005, 0.05), Math.PI - 0.05,
      );
      this.updateCamera();
    }
  }

  private pointerUp(_e: PointerEvent): void {
    if (this.stroking && this.strokePoints.length > 0 && this.onStroke) {
      this.onStroke(this.strokePoints, this.cameraSpec());
    }
    this.stroking = false;
    this.dragging = false;
  }

  private eventPixel(e: PointerEvent): number[] {
    const rect = this.renderer.domElement.getBoundingClientRect();
    return [e.clientX - rect.left, e.clientY - rect.top];
  }

  private updateCamera(): void {
    const { theta, phi, radius, target } = this.orbit;
    this.camera.position.set(
      target.x + radius * Math.sin(phi) * Math.cos(theta),
      target.y + radius * Math.cos(phi),
      target.z + radius * Math.sin(phi) * Math.sin(theta),
    );
    this.camera.lookAt(target);
  }

  private renderLoop(): void {
    const tick = () => {
      this.renderer.render(this.scene, this.camera);
      requestAnimationFrame(tick);
    };
    requestAnimationFrame(tick);
  }
}
