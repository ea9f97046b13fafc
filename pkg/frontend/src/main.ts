import { App } from "./app.js";

const apiBase = (window as { REPORTLOOM_API?: string }).REPORTLOOM_API ?? "/api";

const app = new App(apiBase);
app.boot().catch((err) => {
  const status = document.getElementById("status");
  if (status !== null) {
    status.classList.add("error");
    status.textContent = String(err);
  }
});

(window as unknown as { app: App }).app = app;
