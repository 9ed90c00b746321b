// Typed client for the review service. The fetch implementation is
// injectable so the state machine is testable without a browser or server.

export interface ProviderView {
  name: string
  auth: string
  accepts_pdf_bytes: boolean
  accepts_text: boolean
  rate_limit: number
  default_context_window: number | null
  needs_key: boolean
}

export interface VariableView {
  id: string
  column_index: number
  prompt: string
  kind: string
  category_set: string[] | null
}

export interface CellView {
  variable_id: string
  value: string
  recorded: boolean
  origin: string
  state: 'empty' | 'proposed' | 'recorded'
}

export interface ProposalView {
  variable_id: string
  answer: string
  page: number | null
  rationale: string | null
  parse_status: 'strict' | 'lenient' | 'missing' | 'malformed'
}

export interface ParseOutcomeView {
  proposals: ProposalView[]
  strict_fraction: number
}

export interface DocumentView {
  source_name: string
  page_count: number
  total_chars: number
  content_hash: string
}

export interface SessionView {
  session_id: string
  form_name: string
  current_row: number
  row_count: number
  study_label: string
  variables: VariableView[]
  cells: CellView[]
  proposals: ParseOutcomeView | null
  document: DocumentView | null
  recorded_count: number
}

export interface TokenEstimateView {
  estimated_tokens: number
  method: string
  document_tokens: number
  prompt_tokens: number
}

export interface RecordView {
  variable_id: string
  value: string
  origin: string
  warning: string | null
  recorded_count: number
}

export interface SourceView {
  page: number | null
  rationale: string | null
}

export interface AnalyzeBody {
  provider: string
  model: string
  temperature?: number
  context_window?: number | null
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public errorCode: string,
    message: string,
  ) {
    super(message)
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>

async function unwrap<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let code = 'http_error'
    let message = `${response.status} ${response.statusText}`
    try {
      const body = await response.json()
      if (body && body.error_code) {
        code = body.error_code
        message = body.message ?? message
      }
    } catch {
      // non-JSON error body; keep the status line
    }
    throw new ApiError(response.status, code, message)
  }
  return response.json() as Promise<T>
}

export class ApiClient {
  constructor(
    private base: string = '',
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private url(path: string): string {
    return `${this.base}${path}`
  }

  private async getJson<T>(path: string): Promise<T> {
    return unwrap<T>(await this.fetchImpl(this.url(path)))
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchImpl(this.url(path), {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    })
    return unwrap<T>(response)
  }

  private async postFile<T>(
    path: string,
    field: string,
    name: string,
    content: Blob,
  ): Promise<T> {
    const form = new FormData()
    form.append(field, content, name)
    const response = await this.fetchImpl(this.url(path), {
      method: 'POST',
      body: form,
    })
    return unwrap<T>(response)
  }

  providers(): Promise<ProviderView[]> {
    return this.getJson('/providers')
  }

  createSession(name: string, content: Blob): Promise<SessionView> {
    return this.postFile('/sessions', 'form', name, content)
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.getJson(`/sessions/${sessionId}`)
  }

  submitKey(sessionId: string, provider: string, apiKey: string): Promise<unknown> {
    return this.postJson(`/sessions/${sessionId}/key`, {
      provider,
      api_key: apiKey,
    })
  }

  uploadDocument(
    sessionId: string,
    name: string,
    content: Blob,
    force = false,
  ): Promise<TokenEstimateView> {
    const suffix = force ? '?force=true' : ''
    return this.postFile(
      `/sessions/${sessionId}/document${suffix}`,
      'document',
      name,
      content,
    )
  }

  documentUrl(sessionId: string): string {
    return this.url(`/sessions/${sessionId}/document`)
  }

  analyze(sessionId: string, body: AnalyzeBody): Promise<ParseOutcomeView> {
    return this.postJson(`/sessions/${sessionId}/analyze`, body)
  }

  record(
    sessionId: string,
    variableId: string,
    value?: string,
  ): Promise<RecordView> {
    const body: Record<string, unknown> = { variable_id: variableId }
    if (value !== undefined) body.value = value
    return this.postJson(`/sessions/${sessionId}/record`, body)
  }

  advance(sessionId: string, force = false): Promise<{ row_index: number }> {
    return this.postJson(`/sessions/${sessionId}/advance`, { force })
  }

  source(sessionId: string, variableId: string): Promise<SourceView> {
    return this.getJson(`/sessions/${sessionId}/source/${variableId}`)
  }

  exportUrl(sessionId: string): string {
    return this.url(`/sessions/${sessionId}/export`)
  }
}
