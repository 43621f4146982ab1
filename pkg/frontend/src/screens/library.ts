import { AppState, formatBytes, formatWhen } from "../state.js";
import { guarded, toast } from "../toast.js";

/** Session rows (newest first) with open / upload / delete actions. */
export function renderLibrary(container: HTMLElement, state: AppState): () => void {
  container.innerHTML = `
    <section class="card">
      <h2>Library</h2>
      <table class="rows"><thead>
        <tr><th>created</th><th>status</th><th>streams</th><th>size</th><th></th></tr>
      </thead><tbody id="library-body"></tbody></table>
      <div id="session-detail" class="detail"></div>
    </section>`;

  const body = container.querySelector<HTMLElement>("#library-body")!;
  const detail = container.querySelector<HTMLElement>("#session-detail")!;
  const doc = container.ownerDocument;

  const openDetail = async (sessionId: string) => {
    const info = await guarded(() => state.agent.sessionDetail(sessionId), "open session");
    if (!info) return;
    const counts = Object.entries(info.recordCounts)
      .map(([stream, n]) => `${stream}: ${n}`)
      .join(", ");
    detail.innerHTML = `<h3>session ${sessionId.slice(0, 8)}</h3>
      <p>records — ${counts || "still recording"}</p>
      <p>chunks — ${info.manifest.chunks.length}, ${formatBytes(
        info.manifest.chunks.reduce((a, c) => a + c.byteLength, 0),
      )}</p>`;
  };

  const refresh = async () => {
    const result = await guarded(() => state.agent.sessions(), "list sessions");
    if (!result || !container.isConnected) return;
    body.innerHTML = "";
    for (const manifest of result.sessions) {
      const row = doc.createElement("tr");
      row.dataset.sessionId = manifest.sessionId;
      row.innerHTML = `
        <td>${formatWhen(manifest.createdAt)}</td>
        <td>${manifest.status}</td>
        <td>${manifest.streams.length}</td>
        <td>${formatBytes(manifest.chunks.reduce((a, c) => a + c.byteLength, 0))}</td>
        <td>
          <button data-act="open">open</button>
          <button data-act="upload">upload</button>
          <button data-act="delete">delete</button>
        </td>`;
      row.querySelector<HTMLButtonElement>('[data-act="open"]')!.addEventListener("click", () =>
        openDetail(manifest.sessionId),
      );
      row.querySelector<HTMLButtonElement>('[data-act="upload"]')!.addEventListener("click", async () => {
        const r = await guarded(() => state.agent.enqueueUpload(manifest.sessionId), "enqueue upload");
        if (r) toast(`upload task ${r.task.taskId.slice(0, 8)} ${r.task.state}`, "info");
      });
      row.querySelector<HTMLButtonElement>('[data-act="delete"]')!.addEventListener("click", async () => {
        const r = await guarded(() => state.agent.deleteSession(manifest.sessionId), "delete session");
        if (r !== null) await refresh();
      });
      body.appendChild(row);
    }
  };

  void refresh();
  const timer = setInterval(refresh, 3000);
  return () => clearInterval(timer);
}
