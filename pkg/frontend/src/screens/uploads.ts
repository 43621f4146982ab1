import { AppState, formatBytes } from "../state.js";
import { guarded } from "../toast.js";

/** Per-task rows with a progress bar; pause/cancel on running tasks,
 * resume on paused ones. */
export function renderUploads(container: HTMLElement, state: AppState): () => void {
  container.innerHTML = `
    <section class="card">
      <h2>Uploads</h2>
      <div id="upload-rows"></div>
    </section>`;
  const rowsHost = container.querySelector<HTMLElement>("#upload-rows")!;
  const doc = container.ownerDocument;

  const refresh = async () => {
    const result = await guarded(() => state.agent.uploads(), "list uploads");
    if (!result || !container.isConnected) return;
    rowsHost.innerHTML = "";
    if (result.tasks.length === 0) {
      rowsHost.textContent = "no upload tasks yet";
      return;
    }
    for (const task of [...result.tasks].reverse()) {
      const fraction = task.bytesTotal > 0 ? task.bytesSent / task.bytesTotal : 0;
      const row = doc.createElement("div");
      row.className = "upload-row";
      row.dataset.taskId = task.taskId;
      row.dataset.state = task.state;
      row.innerHTML = `
        <div class="upload-head">
          <span class="upload-name">session ${task.sessionId.slice(0, 8)} (${task.mode})</span>
          <span class="upload-state">${task.state}</span>
        </div>
        <div class="progress"><div class="progress-fill" style="width:${(fraction * 100).toFixed(1)}%"></div></div>
        <div class="upload-meta">${formatBytes(task.bytesSent)} / ${formatBytes(task.bytesTotal)}
          (${(fraction * 100).toFixed(0)}%)${task.lastError ? ` — ${task.lastError}` : ""}</div>
        <div class="upload-actions"></div>`;
      const actions = row.querySelector<HTMLElement>(".upload-actions")!;
      const addAction = (label: string, fn: () => Promise<unknown>) => {
        const btn = doc.createElement("button");
        btn.textContent = label;
        btn.dataset.act = label;
        btn.addEventListener("click", async () => {
          await guarded(fn, label);
          await refresh();
        });
        actions.appendChild(btn);
      };
      if (task.state === "running" || task.state === "queued") {
        addAction("pause", () => state.agent.pause(task.taskId));
        addAction("cancel", () => state.agent.cancel(task.taskId));
      } else if (task.state === "paused") {
        addAction("resume", () => state.agent.resume(task.taskId));
        addAction("cancel", () => state.agent.cancel(task.taskId));
      }
      rowsHost.appendChild(row);
    }
  };

  void refresh();
  const timer = setInterval(refresh, 1000);
  return () => clearInterval(timer);
}
