/**
 * Workbench state machine for an annotation session.
 *
 * Every displayed surface datum comes from a service response; the
 * workbench itself never computes geometry. State only advances on a
 * confirmed response (no optimistic updates), and one request is in
 * flight per session at a time.
 */

import type {
  NextTask,
  Projection,
  ServiceClient,
  TargetTask,
} from "./api.js";
import { ServiceError } from "./api.js";

export interface WorkbenchState {
  sessionId: string;
  target: TargetTask | null;
  done: boolean;
  progress: { done: number; total: number };
  lastProjections: Projection[] | null;
}

/** Rendering surface; the DOM adapter implements this, tests record it. */
export interface Display {
  showTargetCross(target: TargetTask | null): void;
  showProjections(projections: Projection[]): void;
  setProgress(done: number, total: number): void;
  showCompletion(): void;
  warnOffSurface(message: string): void;
  clearWarning(): void;
}

/** Where clicks come from: DOM events in the app, scripts in tests. */
export interface ClickSource {
  nextClick(target: TargetTask): Promise<{ view: number; x: number; y: number }>;
}

export class Workbench {
  private state: WorkbenchState;

  constructor(
    private readonly client: ServiceClient,
    private readonly display: Display,
    sessionId: string,
  ) {
    this.state = {
      sessionId,
      target: null,
      done: false,
      progress: { done: 0, total: 0 },
      lastProjections: null,
    };
  }

  snapshot(): WorkbenchState {
    return {
      ...this.state,
      progress: { ...this.state.progress },
      lastProjections: this.state.lastProjections
        ? [...this.state.lastProjections]
        : null,
    };
  }

  /** Pull the authoritative state and render it (also restores a refresh). */
  async refresh(): Promise<NextTask> {
    const task = await this.client.nextTask(this.state.sessionId);
    this.state.done = task.done;
    this.state.target = task.target;
    this.state.progress = task.progress;
    this.state.lastProjections = task.last ? task.last.projections : null;
    this.display.setProgress(task.progress.done, task.progress.total);
    this.display.showTargetCross(task.target);
    if (this.state.lastProjections) {
      this.display.showProjections(this.state.lastProjections);
    }
    if (task.done) {
      this.display.showCompletion();
    }
    return task;
  }

  /**
   * Submit one click for the current target. Off-surface clicks warn and
   * leave the target unchanged; anything else re-throws.
   */
  async submit(view: number, x: number, y: number): Promise<boolean> {
    if (this.state.target === null) {
      return false;
    }
    this.display.clearWarning();
    try {
      const result = await this.client.submitClick(
        this.state.sessionId,
        this.state.target.index,
        view,
        Math.round(x),
        Math.round(y),
      );
      this.state.lastProjections = result.projections;
      this.display.showProjections(result.projections);
      return true;
    } catch (err) {
      if (err instanceof ServiceError && err.code === "NO_SURFACE") {
        this.display.warnOffSurface(
          "That click missed the surface; pick a point on the rendered part.",
        );
        return false;
      }
      throw err;
    }
  }

  /**
   * Drive the session to completion: present targets in succession,
   * consume clicks from the source, advance only on confirmed points.
   */
  async runAnnotationLoop(source: ClickSource): Promise<WorkbenchState> {
    let task = await this.refresh();
    while (!task.done) {
      const target = task.target;
      if (target === null) {
        throw new Error("service reported an active session without a target");
      }
      const click = await source.nextClick(target);
      const accepted = await this.submit(click.view, click.x, click.y);
      if (accepted) {
        task = await this.refresh();
      }
      // rejected (off-surface) clicks keep the same target and wait for
      // the next click
    }
    return this.snapshot();
  }
}
