// DOM layer: renders the store state and forwards user intent to it.
// All data decisions live server-side; this file is wiring only.

import { ApiClient, ApiError } from './api.js'
import { Card, State, Store } from './store.js'
import { PdfViewer } from './viewer.js'

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = '',
  text = '',
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag)
  if (className) node.className = className
  if (text) node.textContent = text
  return node
}

export class App {
  private root: HTMLElement
  private viewer: PdfViewer | null = null
  private lastSignature = ''

  constructor(
    private store: Store,
    private api: ApiClient,
    root: HTMLElement,
  ) {
    this.root = root
    store.subscribe((state) => this.render(state))
  }

  render(state: State): void {
    const signature = this.signature(state)
    if (signature === this.lastSignature) {
      this.syncViewer(state)
      return
    }
    this.lastSignature = signature
    if (state.screen === 'setup') {
      this.renderSetup(state)
    } else {
      this.renderAnalysis(state)
    }
    this.syncViewer(state)
  }

  // Re-render only on structural changes; typing stays local to inputs.
  private signature(state: State): string {
    return JSON.stringify([
      state.screen,
      state.providers.map((p) => p.name),
      state.provider,
      state.sessionId,
      state.studyLabel,
      state.currentRow,
      state.documentName,
      state.tokenEstimate?.estimated_tokens ?? null,
      state.recordedCount,
      state.busy,
      state.error,
      state.cards.map((c) => [
        c.variableId,
        c.recorded,
        c.proposal?.answer ?? null,
        c.sourceOpen,
        c.warning,
      ]),
    ])
  }

  private syncViewer(state: State): void {
    if (this.viewer && state.documentName) {
      this.viewer.setPage(state.viewerPage)
    }
  }

  // -- setup screen --

  private renderSetup(state: State): void {
    if (window.location.hash.startsWith('#/session/')) {
      window.location.hash = ''
    }
    const panel = el('div', 'setup-panel')
    panel.append(el('h1', '', 'Data extraction setup'))
    panel.append(
      el(
        'p',
        'hint',
        'Pick a provider and model, then upload your coding form. ' +
          'Row 1 of the form is read as the prompts sent to the model.',
      ),
    )

    const providerRow = el('label', 'field', 'Provider')
    const providerSelect = el('select')
    for (const provider of state.providers) {
      const option = el('option', '', provider.name)
      option.value = provider.name
      if (provider.name === state.provider) option.selected = true
      providerSelect.append(option)
    }
    providerRow.append(providerSelect)
    panel.append(providerRow)

    const keyRow = el('label', 'field', 'API key (held in memory only)')
    const keyInput = el('input')
    keyInput.type = 'password'
    keyInput.value = state.apiKey
    keyRow.append(keyInput)
    panel.append(keyRow)

    const modelRow = el('label', 'field', 'Model')
    const modelInput = el('input')
    modelInput.placeholder = 'model identifier'
    modelInput.value = state.model
    modelRow.append(modelInput)
    panel.append(modelRow)

    const formRow = el('label', 'field', 'Coding form (CSV, first row = prompts)')
    const fileInput = el('input')
    fileInput.type = 'file'
    fileInput.accept = '.csv,text/csv'
    formRow.append(fileInput)
    panel.append(formRow)

    const submit = el('button', 'primary', 'Start session')
    panel.append(submit)
    const errorBox = el('p', 'error', state.error ?? '')
    panel.append(errorBox)

    const refresh = () => {
      const provider = state.providers.find((p) => p.name === providerSelect.value)
      keyRow.style.display = provider?.needs_key ? '' : 'none'
      submit.disabled =
        !this.store.canSubmitSetup(Boolean(fileInput.files?.length)) || state.busy
    }
    providerSelect.addEventListener('change', () => {
      this.store.setProvider(providerSelect.value)
    })
    keyInput.addEventListener('input', () => {
      this.store.setApiKey(keyInput.value)
      refresh()
    })
    modelInput.addEventListener('input', () => {
      this.store.setModel(modelInput.value)
      refresh()
    })
    fileInput.addEventListener('change', refresh)
    submit.addEventListener('click', async () => {
      const file = fileInput.files?.[0]
      if (!file) return
      try {
        await this.store.createSession(file.name, file)
        window.location.hash = `#/session/${this.store.state.sessionId}`
      } catch {
        // error already in state; stay on setup
      }
    })
    refresh()
    this.root.replaceChildren(panel)
  }

  // -- analysis screen --

  private renderAnalysis(state: State): void {
    const layout = el('div', 'analysis-layout')
    layout.append(this.renderHeader(state))

    const columns = el('div', 'columns')
    columns.append(this.renderDocumentPane(state))
    columns.append(this.renderCardsPane(state))
    layout.append(columns)
    this.root.replaceChildren(layout)

    if (state.documentName && state.sessionId) {
      this.viewer = new PdfViewer(
        layout.querySelector('.viewer-container') as HTMLElement,
      )
      this.viewer.setDocument(this.api.documentUrl(state.sessionId))
      this.viewer.setPage(state.viewerPage)
    }
  }

  private renderHeader(state: State): HTMLElement {
    const header = el('header', 'topbar')
    header.append(el('span', 'title', state.studyLabel || '(no study attached)'))
    header.append(
      el('span', 'row-indicator', `row ${state.currentRow + 1}`),
    )
    const progress = el(
      'span',
      'progress',
      `${state.recordedCount} / ${state.cards.length} recorded`,
    )
    progress.setAttribute('data-testid', 'progress')
    header.append(progress)
    if (state.sessionId) {
      const exportLink = el('a', 'export', 'Download coding form')
      exportLink.href = this.api.exportUrl(state.sessionId)
      header.append(exportLink)
    }
    if (state.error) header.append(el('span', 'error banner', state.error))
    return header
  }

  private renderDocumentPane(state: State): HTMLElement {
    const pane = el('section', 'document-pane')

    const uploadRow = el('div', 'upload-row')
    const fileInput = el('input')
    fileInput.type = 'file'
    fileInput.accept = '.pdf,application/pdf'
    uploadRow.append(fileInput)
    const uploadButton = el('button', '', state.documentName ? 'Upload next PDF' : 'Upload PDF')
    uploadButton.disabled = state.busy
    uploadButton.addEventListener('click', async () => {
      const file = fileInput.files?.[0]
      if (!file) return
      try {
        await this.store.uploadDocument(file.name, file)
      } catch (error) {
        if (
          error instanceof ApiError &&
          error.errorCode === 'unrecorded_cells' &&
          window.confirm(
            'This study still has unrecorded cells. Move on anyway and leave them empty?',
          )
        ) {
          await this.store.uploadDocument(file.name, file, true)
        }
      }
    })
    uploadRow.append(uploadButton)
    pane.append(uploadRow)

    if (state.tokenEstimate) {
      pane.append(
        el(
          'div',
          'token-banner',
          `Estimated request size: ${state.tokenEstimate.estimated_tokens} tokens ` +
            `(document ${state.tokenEstimate.document_tokens}, prompts ` +
            `${state.tokenEstimate.prompt_tokens}; ${state.tokenEstimate.method})`,
        ),
      )
    }

    if (this.store.showsContextWindow()) {
      const contextRow = el('label', 'field inline', 'Context window (tokens)')
      const contextInput = el('input')
      contextInput.type = 'number'
      contextInput.value = String(
        state.contextWindow ??
          this.store.selectedProvider()?.default_context_window ??
          '',
      )
      contextInput.addEventListener('change', () => {
        const parsed = parseInt(contextInput.value, 10)
        this.store.setContextWindow(Number.isFinite(parsed) ? parsed : null)
      })
      contextRow.append(contextInput)
      pane.append(contextRow)
    }

    const analyzeButton = el('button', 'primary analyze', 'Analyze PDF')
    analyzeButton.disabled = !state.documentName || state.busy
    analyzeButton.addEventListener('click', () => {
      void this.store.analyze().catch(() => undefined)
    })
    pane.append(analyzeButton)

    pane.append(el('div', 'viewer-container'))
    return pane
  }

  private renderCardsPane(state: State): HTMLElement {
    const pane = el('section', 'cards-pane')
    for (const card of state.cards) {
      pane.append(this.renderCard(card, state))
    }
    return pane
  }

  private renderCard(card: Card, state: State): HTMLElement {
    const box = el('article', card.recorded ? 'card recorded' : 'card')
    box.setAttribute('data-variable', card.variableId)

    const head = el('div', 'card-head')
    head.append(el('span', 'prompt', card.prompt))
    if (card.parseStatus && !card.recorded) {
      head.append(el('span', `badge ${card.parseStatus}`, card.parseStatus))
    }
    if (card.recorded && card.origin) {
      head.append(el('span', 'badge recorded', card.origin))
    }
    box.append(head)

    const answer = el('textarea', 'answer') as HTMLTextAreaElement
    answer.value = card.answer
    answer.disabled = card.recorded
    answer.rows = 2
    box.append(answer)

    const actions = el('div', 'card-actions')
    const sourceButton = el('button', 'source-toggle', 'Source')
    sourceButton.disabled = card.proposal === null || state.busy
    sourceButton.addEventListener('click', () => {
      void this.store.toggleSource(card.variableId).catch(() => undefined)
    })
    actions.append(sourceButton)

    const recordButton = el(
      'button',
      'record',
      card.recorded ? 'Recorded' : 'Record',
    )
    const syncRecordEnabled = () => {
      recordButton.disabled =
        card.recorded ||
        state.busy ||
        (card.proposal === null && answer.value.trim() === '')
    }
    syncRecordEnabled()
    answer.addEventListener('input', () => {
      this.store.setAnswer(card.variableId, answer.value)
      syncRecordEnabled()
    })
    recordButton.addEventListener('click', () => {
      this.store.setAnswer(card.variableId, answer.value)
      void this.store.record(card.variableId).catch(() => undefined)
    })
    actions.append(recordButton)
    box.append(actions)

    if (card.warning) box.append(el('p', 'warning', card.warning))
    if (card.sourceOpen) {
      const source = el('div', 'source-panel')
      source.append(
        el(
          'p',
          'rationale',
          card.sourceRationale ?? '(no rationale provided)',
        ),
      )
      source.append(
        el(
          'p',
          'page-note',
          card.sourcePage !== null
            ? `page ${card.sourcePage}`
            : 'page reference unavailable or out of range',
        ),
      )
      box.append(source)
    }
    return box
  }
}
