import { ApiClient } from "./api.js";
import { startApp } from "./app.js";

const params = new URLSearchParams(window.location.search);
const serviceUrl = params.get("api") ?? "";
const mount = document.getElementById("app");
if (!mount) throw new Error("missing #app mount point");
startApp(mount, new ApiClient(serviceUrl));
