import { ApiClient } from './api.js'
import { Store } from './store.js'
import { App } from './ui.js'

const api = new ApiClient('')
const store = new Store(api)
const root = document.getElementById('app')
if (!root) throw new Error('missing #app root')
new App(store, api, root)

async function boot(): Promise<void> {
  const match = window.location.hash.match(/^#\/session\/([0-9a-f]+)$/)
  if (match) {
    try {
      await store.restore(match[1])
      return
    } catch {
      window.location.hash = ''
    }
  }
  await store.loadProviders()
}

void boot()
