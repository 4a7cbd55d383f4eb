import { mountApp } from "./app.js";

const root = document.getElementById("app");
// same-origin when served by `dynaq serve --ui-dir`
if (root) mountApp(root, { baseUrl: "" });
