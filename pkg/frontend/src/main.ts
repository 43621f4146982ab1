import { AppState, basesFromLocation } from "./state.js";
import { mountToasts } from "./toast.js";
import { renderAuth } from "./screens/auth.js";
import { renderChart } from "./screens/chartScreen.js";
import { renderLibrary } from "./screens/library.js";
import { renderMonitoring } from "./screens/monitoring.js";
import { renderSettings } from "./screens/settings.js";
import { renderUploads } from "./screens/uploads.js";

type Screen = "monitoring" | "library" | "uploads" | "charts" | "settings";

const SCREENS: { id: Screen; label: string }[] = [
  { id: "monitoring", label: "Monitor" },
  { id: "library", label: "Library" },
  { id: "uploads", label: "Uploads" },
  { id: "charts", label: "Charts" },
  { id: "settings", label: "Settings" },
];

export class App {
  state: AppState;
  root: HTMLElement;
  private cleanup: (() => void) | null = null;

  constructor(root: HTMLElement, agentBase: string, serverBase: string) {
    this.state = new AppState(agentBase, serverBase);
    this.root = root;
  }

  mount(): void {
    const doc = this.root.ownerDocument;
    this.root.innerHTML = `
      <header><h1>drivelab console</h1><span id="who"></span></header>
      <nav id="tabs" style="display:none"></nav>
      <main id="screen"></main>`;
    mountToasts(this.root);
    const tabs = this.root.querySelector<HTMLElement>("#tabs")!;
    for (const screen of SCREENS) {
      const btn = doc.createElement("button");
      btn.dataset.tab = screen.id;
      btn.textContent = screen.label;
      btn.addEventListener("click", () => this.show(screen.id));
      tabs.appendChild(btn);
    }
    this.showAuth();
  }

  private container(): HTMLElement {
    return this.root.querySelector<HTMLElement>("#screen")!;
  }

  showAuth(): void {
    this.cleanup?.();
    this.cleanup = null;
    renderAuth(this.container(), this.state, () => {
      this.root.querySelector<HTMLElement>("#who")!.textContent = this.state.email;
      this.root.querySelector<HTMLElement>("#tabs")!.style.display = "";
      this.show("monitoring");
    });
  }

  show(screen: Screen): void {
    this.cleanup?.();
    this.cleanup = null;
    for (const btn of this.root.querySelectorAll<HTMLButtonElement>("#tabs button")) {
      btn.classList.toggle("active", btn.dataset.tab === screen);
    }
    const host = this.container();
    switch (screen) {
      case "monitoring":
        this.cleanup = renderMonitoring(host, this.state);
        break;
      case "library":
        this.cleanup = renderLibrary(host, this.state);
        break;
      case "uploads":
        this.cleanup = renderUploads(host, this.state);
        break;
      case "charts":
        this.cleanup = renderChart(host, this.state);
        break;
      case "settings":
        this.cleanup = renderSettings(host, this.state);
        break;
    }
  }
}

/** Browser entry point; tests construct App directly instead. */
export function start(): void {
  const bases = basesFromLocation(window.location);
  const app = new App(document.getElementById("app")!, bases.agent, bases.server);
  app.mount();
}

if (typeof window !== "undefined" && typeof document !== "undefined" && document.getElementById("app")) {
  start();
}
