// View-model for the review flow. Never computes or mutates form data
// itself: every state change round-trips through the HTTP API, and a
// page refresh rebuilds the identical view from GET /sessions/{id}.

import {
  ApiClient,
  ParseOutcomeView,
  ProposalView,
  ProviderView,
  SessionView,
  TokenEstimateView,
} from './api.js'

export type Screen = 'setup' | 'analysis'

export interface Card {
  variableId: string
  prompt: string
  answer: string
  proposal: ProposalView | null
  parseStatus: string | null
  recorded: boolean
  origin: string | null
  warning: string | null
  sourceOpen: boolean
  sourceRationale: string | null
  sourcePage: number | null
}

export interface State {
  screen: Screen
  providers: ProviderView[]
  provider: string
  apiKey: string
  model: string
  contextWindow: number | null
  sessionId: string | null
  studyLabel: string
  currentRow: number
  documentName: string | null
  documentPages: number
  tokenEstimate: TokenEstimateView | null
  cards: Card[]
  recordedCount: number
  viewerPage: number
  busy: boolean
  error: string | null
}

function initialState(): State {
  return {
    screen: 'setup',
    providers: [],
    provider: '',
    apiKey: '',
    model: '',
    contextWindow: null,
    sessionId: null,
    studyLabel: '',
    currentRow: 0,
    documentName: null,
    documentPages: 0,
    tokenEstimate: null,
    cards: [],
    recordedCount: 0,
    viewerPage: 1,
    busy: false,
    error: null,
  }
}

type Listener = (state: State) => void

export class Store {
  state: State = initialState()
  private listeners: Listener[] = []

  constructor(private api: ApiClient) {}

  subscribe(listener: Listener): void {
    this.listeners.push(listener)
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state)
  }

  private patch(partial: Partial<State>): void {
    this.state = { ...this.state, ...partial }
    this.emit()
  }

  // -- derived --

  selectedProvider(): ProviderView | null {
    return this.state.providers.find((p) => p.name === this.state.provider) ?? null
  }

  /** The context-window control is shown only for the local provider. */
  showsContextWindow(): boolean {
    return this.selectedProvider()?.default_context_window != null
  }

  /** Setup submit gate: key required unless the provider needs none. */
  canSubmitSetup(formChosen: boolean): boolean {
    const provider = this.selectedProvider()
    if (!provider || !this.state.model || !formChosen) return false
    if (provider.needs_key && !this.state.apiKey) return false
    return true
  }

  /** Record enabled iff (proposal exists or box nonempty) and not recorded. */
  canRecord(card: Card): boolean {
    if (card.recorded) return false
    return card.proposal !== null || card.answer.trim() !== ''
  }

  card(variableId: string): Card {
    const card = this.state.cards.find((c) => c.variableId === variableId)
    if (!card) throw new Error(`no card for ${variableId}`)
    return card
  }

  // -- card assembly (server state is the single source of truth) --

  private cardsFromSession(view: SessionView): Card[] {
    const proposalById = new Map<string, ProposalView>()
    for (const p of view.proposals?.proposals ?? []) {
      proposalById.set(p.variable_id, p)
    }
    return view.variables.map((variable, index) => {
      const cell = view.cells[index]
      const proposal = proposalById.get(variable.id) ?? null
      const usable =
        proposal !== null &&
        (proposal.parse_status === 'strict' || proposal.parse_status === 'lenient')
      return {
        variableId: variable.id,
        prompt: variable.prompt,
        answer: cell.recorded ? cell.value : usable ? proposal.answer : '',
        proposal: usable ? proposal : null,
        parseStatus: proposal?.parse_status ?? null,
        recorded: cell.recorded,
        origin: cell.recorded ? cell.origin : null,
        warning: null,
        sourceOpen: false,
        sourceRationale: null,
        sourcePage: null,
      }
    })
  }

  private applySession(view: SessionView): void {
    this.patch({
      sessionId: view.session_id,
      studyLabel: view.study_label,
      currentRow: view.current_row,
      documentName: view.document?.source_name ?? null,
      documentPages: view.document?.page_count ?? 0,
      cards: this.cardsFromSession(view),
      recordedCount: view.recorded_count,
      screen: 'analysis',
    })
  }

  // -- actions --

  async loadProviders(): Promise<void> {
    const providers = await this.api.providers()
    this.patch({ providers, provider: this.state.provider || providers[0]?.name || '' })
  }

  setProvider(name: string): void {
    this.patch({ provider: name })
  }

  setApiKey(key: string): void {
    this.patch({ apiKey: key })
  }

  setModel(model: string): void {
    this.patch({ model })
  }

  setContextWindow(value: number | null): void {
    this.patch({ contextWindow: value })
  }

  async createSession(formName: string, content: Blob): Promise<void> {
    await this.run(async () => {
      const view = await this.api.createSession(formName, content)
      const provider = this.selectedProvider()
      if (provider?.needs_key && this.state.apiKey) {
        await this.api.submitKey(view.session_id, provider.name, this.state.apiKey)
        // the key lives server-side (in memory) from here on
        this.patch({ apiKey: '' })
      }
      this.applySession(view)
    })
  }

  /** Rebuild the whole view from the server (page refresh / deep link). */
  async restore(sessionId: string): Promise<void> {
    await this.run(async () => {
      const view = await this.api.getSession(sessionId)
      this.applySession(view)
      if (this.state.providers.length === 0) {
        await this.loadProviders()
      }
    })
  }

  async uploadDocument(name: string, content: Blob, force = false): Promise<void> {
    await this.run(async () => {
      const estimate = await this.api.uploadDocument(
        this.requireSession(),
        name,
        content,
        force,
      )
      const view = await this.api.getSession(this.requireSession())
      this.applySession(view)
      this.patch({ tokenEstimate: estimate, viewerPage: 1 })
    })
  }

  async analyze(): Promise<void> {
    await this.run(async () => {
      const body = {
        provider: this.state.provider,
        model: this.state.model,
        temperature: 0.0,
        context_window: this.showsContextWindow() ? this.state.contextWindow : null,
      }
      const outcome: ParseOutcomeView = await this.api.analyze(
        this.requireSession(),
        body,
      )
      void outcome
      const view = await this.api.getSession(this.requireSession())
      this.applySession(view)
    })
  }

  setAnswer(variableId: string, text: string): void {
    this.patch({
      cards: this.state.cards.map((c) =>
        c.variableId === variableId ? { ...c, answer: text } : c,
      ),
    })
  }

  async record(variableId: string): Promise<void> {
    const card = this.card(variableId)
    if (!this.canRecord(card)) return
    await this.run(async () => {
      // Accept the proposal verbatim unless the box was edited.
      const value =
        card.proposal && card.answer === card.proposal.answer
          ? undefined
          : card.answer
      const result = await this.api.record(this.requireSession(), variableId, value)
      this.patch({
        recordedCount: result.recorded_count,
        cards: this.state.cards.map((c) =>
          c.variableId === variableId
            ? {
                ...c,
                recorded: true,
                answer: result.value,
                origin: result.origin,
                warning: result.warning,
              }
            : c,
        ),
      })
    })
  }

  /** Source toggle: rationale always; scroll only for an in-range page. */
  async toggleSource(variableId: string): Promise<void> {
    const card = this.card(variableId)
    if (card.sourceOpen) {
      this.patch({
        cards: this.state.cards.map((c) =>
          c.variableId === variableId ? { ...c, sourceOpen: false } : c,
        ),
      })
      return
    }
    await this.run(async () => {
      const source = await this.api.source(this.requireSession(), variableId)
      this.patch({
        cards: this.state.cards.map((c) =>
          c.variableId === variableId
            ? {
                ...c,
                sourceOpen: true,
                sourceRationale: source.rationale,
                sourcePage: source.page,
              }
            : c,
        ),
      })
      if (source.page !== null) {
        this.patch({ viewerPage: source.page })
      }
    })
  }

  async advance(force = false): Promise<void> {
    await this.run(async () => {
      await this.api.advance(this.requireSession(), force)
      const view = await this.api.getSession(this.requireSession())
      this.applySession(view)
      this.patch({ tokenEstimate: null, viewerPage: 1 })
    })
  }

  // -- plumbing --

  private requireSession(): string {
    if (!this.state.sessionId) throw new Error('no active session')
    return this.state.sessionId
  }

  private async run(body: () => Promise<void>): Promise<void> {
    this.patch({ busy: true, error: null })
    try {
      await body()
    } catch (error) {
      this.patch({ error: error instanceof Error ? error.message : String(error) })
      throw error
    } finally {
      this.patch({ busy: false })
    }
  }
}
