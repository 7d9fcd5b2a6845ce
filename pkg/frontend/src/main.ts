import { ApiClient } from './api.js';
import { initApp } from './app.js';

initApp(document, new ApiClient(''));
