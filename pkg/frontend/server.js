// Static file server with an /api proxy to the session service, so the UI
// and the API share an origin during development. No framework needed.

import { createServer, request as httpRequest } from "node:http";
import { readFile } from "node:fs/promises";
import { extname, join, normalize } from "node:path";
import { fileURLToPath } from "node:url";

const root = fileURLToPath(new URL(".", import.meta.url));
const port = Number(process.env.PORT ?? 5173);
const apiTarget = new URL(process.env.REPORTLOOM_API ?? "http://127.0.0.1:8080");

const MIME = {
  ".html": "text/html",
  ".js": "text/javascript",
  ".mjs": "text/javascript",
  ".map": "application/json",
  ".json": "application/json",
  ".css": "text/css",
};

function proxy(req, res) {
  const upstream = httpRequest(
    {
      hostname: apiTarget.hostname,
      port: apiTarget.port,
      path: req.url.replace(/^\/api/, "") || "/",
      method: req.method,
      headers: { ...req.headers, host: apiTarget.host },
    },
    (upstreamRes) => {
      res.writeHead(upstreamRes.statusCode ?? 502, upstreamRes.headers);
      upstreamRes.pipe(res);
    },
  );
  upstream.on("error", (err) => {
    res.writeHead(502, { "content-type": "application/json" });
    res.end(JSON.stringify({ error: "BadGateway", detail: String(err) }));
  });
  req.pipe(upstream);
}

const server = createServer(async (req, res) => {
  if (req.url.startsWith("/api/")) {
    proxy(req, res);
    return;
  }
  const path = req.url === "/" ? "/index.html" : req.url.split("?")[0];
  const file = normalize(join(root, path));
  if (!file.startsWith(root)) {
    res.writeHead(403);
    res.end();
    return;
  }
  try {
    const body = await readFile(file);
    res.writeHead(200, { "content-type": MIME[extname(file)] ?? "application/octet-stream" });
    res.end(body);
  } catch {
    res.writeHead(404, { "content-type": "text/plain" });
    res.end("not found");
  }
});

server.listen(port, () => {
  console.log(`ui on http://127.0.0.1:${port} (api -> ${apiTarget.href})`);
});
